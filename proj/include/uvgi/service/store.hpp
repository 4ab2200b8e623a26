#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace uvgi::service {

// Directory of JSON documents: <root>/{scenes,profiles,runs}/<id>.json.
// Run artifacts live under <root>/runs/<id>/.
class Store {
 public:
  enum class Kind { scene, profile, run };

  // Creates the layout if needed. Throws std::runtime_error when root is not
  // a usable directory.
  explicit Store(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }

  void put(Kind kind, const std::string& id, const nlohmann::json& doc) const;
  std::optional<nlohmann::json> get(Kind kind, const std::string& id) const;
  std::vector<std::string> list(Kind kind) const;
  std::filesystem::path run_dir(const std::string& id) const;

  // Fresh id "<prefix>-<16 hex>" not present on disk.
  std::string new_id(const std::string& prefix) const;

  static bool valid_id(const std::string& id);

 private:
  std::filesystem::path dir(Kind kind) const;
  std::filesystem::path root_;
};

}  // namespace uvgi::service
