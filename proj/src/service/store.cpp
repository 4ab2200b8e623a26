#include "uvgi/service/store.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <stdexcept>

#include "uvgi/io.hpp"

namespace uvgi::service {

namespace fs = std::filesystem;

Store::Store(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  if (fs::exists(root_, ec) && !fs::is_directory(root_, ec))
    throw std::runtime_error("data directory " + root_.string() + " is not a directory");
  for (const char* sub : {"scenes", "profiles", "runs"}) {
    fs::create_directories(root_ / sub, ec);
    if (ec) throw std::runtime_error("cannot create " + (root_ / sub).string() + ": " + ec.message());
  }
}

fs::path Store::dir(Kind kind) const {
  switch (kind) {
    case Kind::scene: return root_ / "scenes";
    case Kind::profile: return root_ / "profiles";
    case Kind::run: return root_ / "runs";
  }
  return root_;
}

bool Store::valid_id(const std::string& id) {
  return !id.empty() && id.size() <= 64 && std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
  });
}

void Store::put(Kind kind, const std::string& id, const nlohmann::json& doc) const {
  if (!valid_id(id)) throw std::invalid_argument("invalid id '" + id + "'");
  io::write_file_atomic(dir(kind) / (id + ".json"), io::dump(doc));
}

std::optional<nlohmann::json> Store::get(Kind kind, const std::string& id) const {
  if (!valid_id(id)) return std::nullopt;
  const fs::path path = dir(kind) / (id + ".json");
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) return std::nullopt;
  return nlohmann::json::parse(io::read_file(path));
}

std::vector<std::string> Store::list(Kind kind) const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir(kind))) {
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

fs::path Store::run_dir(const std::string& id) const { return dir(Kind::run) / id; }

std::string Store::new_id(const std::string& prefix) const {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  for (;;) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
    std::string id = prefix + "-" + buf;
    bool taken = false;
    for (Kind k : {Kind::scene, Kind::profile, Kind::run})
      taken = taken || fs::exists(dir(k) / (id + ".json"));
    if (!taken) return id;
  }
}

}  // namespace uvgi::service
