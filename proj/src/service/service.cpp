#include "uvgi/service/service.hpp"

#include <cmath>
#include <ctime>

#include "uvgi/errors.hpp"
#include "uvgi/io.hpp"
#include "uvgi/pipeline.hpp"

namespace uvgi::service {

namespace {

constexpr double kMaxRateConstant = 10.0;  // m^2/J

std::string now_iso() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ServiceError bad_request(const std::string& what, json detail = json::object()) {
  return ServiceError(400, what, std::move(detail));
}

double number_field(const json& body, const char* key, std::optional<double> fallback = std::nullopt) {
  if (!body.is_object() || !body.contains(key) || body.at(key).is_null()) {
    if (fallback) return *fallback;
    throw bad_request(std::string("missing field '") + key + "'");
  }
  if (!body.at(key).is_number()) throw bad_request(std::string("field '") + key + "' must be a number");
  return body.at(key).get<double>();
}

std::size_t cell_count(double extent, double resolution) {
  return static_cast<std::size_t>(std::max(1.0, std::ceil(extent / resolution - 1e-9)));
}

std::vector<Vec3> vertices_from_json(const json& vertices) {
  if (!vertices.is_array()) throw bad_request("'vertices' must be an array of [x, y, z]");
  std::vector<Vec3> out;
  for (const auto& v : vertices) {
    if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number())
      throw bad_request("each vertex must be [x, y, z]");
    out.push_back({v[0].get<double>(), v[1].get<double>(), v[2].get<double>()});
  }
  return out;
}

ScenarioParams scenario_from(const json& params) {
  ScenarioParams p;
  p.k = params.at("k").get<double>();
  p.rate = params.at("rate").get<double>();
  p.v_max = params.at("v_max").get<double>();
  p.accel = params.at("accel").get<double>();
  p.lamp_decay = params.at("lamp_on").get<bool>();
  p.motion = parse_motion_kind(params.at("motion").get<std::string>());
  if (params.contains("pass_spacing_m") && !params.at("pass_spacing_m").is_null())
    p.pass_spacing = params.at("pass_spacing_m").get<double>();
  return p;
}

RegionSpec region_from(const json& scene) {
  return make_region(vertices_from_json(scene.at("region").at("vertices")));
}

}  // namespace

DisinfectionService::DisinfectionService(std::filesystem::path data_dir) : store_(std::move(data_dir)) {
  recover_interrupted_runs();
}

DisinfectionService::~DisinfectionService() {
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(registry_mutex_);
    workers.swap(workers_);
  }
  for (auto& w : workers)
    if (w.joinable()) w.join();
}

void DisinfectionService::recover_interrupted_runs() {
  for (const auto& id : store_.list(Store::Kind::run)) {
    auto run = store_.get(Store::Kind::run, id);
    if (!run) continue;
    const auto state = run->value("state", "");
    if (state == "pending" || state == "running") {
      (*run)["state"] = "failed";
      (*run)["error"] = "interrupted by service restart";
      (*run)["finished"] = now_iso();
      store_.put(Store::Kind::run, id, *run);
    }
  }
}

std::shared_ptr<std::mutex> DisinfectionService::scene_lock(const std::string& id) {
  std::lock_guard lock(registry_mutex_);
  auto& slot = scene_locks_[id];
  if (!slot) slot = std::make_shared<std::mutex>();
  return slot;
}

json DisinfectionService::load_scene(const std::string& id) const {
  auto scene = store_.get(Store::Kind::scene, id);
  if (!scene) throw ServiceError(404, "unknown scene '" + id + "'");
  return *scene;
}

json DisinfectionService::create_profile(std::string_view csv, int order,
                                         std::optional<double> cutoff_radius,
                                         std::optional<double> calibration_height) {
  std::vector<IrradianceMeasurement> samples;
  try {
    samples = io::parse_measurement_csv(csv);
  } catch (const ParseError& e) {
    throw bad_request(e.what());
  }
  FitOptions options;
  options.cutoff_radius = cutoff_radius;
  if (calibration_height) options.calibration_height = *calibration_height;
  try {
    const IrradianceProfile profile = fit_profile(samples, order, options);
    const std::string id = store_.new_id("prof");
    json doc{{"id", id},
             {"profile", io::profile_to_json(profile)},
             {"samples", samples.size()},
             {"max_residual_W_m2", max_fit_residual(profile, samples)}};
    store_.put(Store::Kind::profile, id, doc);
    return doc;
  } catch (const FitError& e) {
    throw bad_request(e.what());
  } catch (const DomainError& e) {
    throw bad_request(e.what());
  }
}

json DisinfectionService::get_profile(const std::string& id) const {
  auto doc = store_.get(Store::Kind::profile, id);
  if (!doc) throw ServiceError(404, "unknown profile '" + id + "'");
  return *doc;
}

json DisinfectionService::create_scene(const json& body) {
  const double width = number_field(body, "width_m");
  const double length = number_field(body, "length_m");
  const double resolution = number_field(body, "resolution_m", 0.01);
  if (!(width > 0.0) || !(length > 0.0)) throw bad_request("surface dimensions must be positive");
  if (!(resolution > 0.0)) throw bad_request("resolution must be positive");
  if (!body.contains("profile_id") || !body.at("profile_id").is_string())
    throw bad_request("missing field 'profile_id'");
  const auto profile_id = body.at("profile_id").get<std::string>();
  get_profile(profile_id);

  const std::string id = store_.new_id("scene");
  json scene{{"id", id},
             {"surface",
              {{"width_m", width},
               {"length_m", length},
               {"resolution_m", resolution},
               {"grid", {{"width_cells", cell_count(width, resolution)},
                         {"length_cells", cell_count(length, resolution)}}}}},
             {"profile_id", profile_id},
             {"region", nullptr},
             {"params", nullptr},
             {"plan", nullptr},
             {"run_ids", json::array()}};
  store_.put(Store::Kind::scene, id, scene);
  return scene;
}

json DisinfectionService::get_scene(const std::string& id) const { return load_scene(id); }

json DisinfectionService::list_scenes() const {
  json out = json::array();
  for (const auto& id : store_.list(Store::Kind::scene)) {
    if (auto scene = store_.get(Store::Kind::scene, id)) out.push_back(std::move(*scene));
  }
  return out;
}

json DisinfectionService::set_region(const std::string& id, const json& body) {
  auto lock = scene_lock(id);
  std::lock_guard guard(*lock);
  json scene = load_scene(id);
  if (!body.is_object() || !body.contains("vertices")) throw bad_request("missing field 'vertices'");
  const auto vertices = vertices_from_json(body.at("vertices"));
  RegionSpec region;
  try {
    region = make_region(vertices);
  } catch (const PlanningError& e) {
    throw bad_request(e.what(), {{"max_residual_m", e.max_residual()}});
  }
  json verts = json::array();
  for (const auto& v : vertices) verts.push_back({v.x, v.y, v.z});
  const auto& n = region.fit.plane.normal;
  scene["region"] = {{"vertices", verts},
                     {"normal", {n.x, n.y, n.z}},
                     {"offset_m", region.fit.plane.offset},
                     {"max_residual_m", region.fit.max_residual},
                     {"rms_residual_m", region.fit.rms_residual},
                     {"within_tolerance", region.within_tolerance},
                     {"length_m", region.length},
                     {"width_m", region.width}};
  scene["plan"] = nullptr;
  store_.put(Store::Kind::scene, id, scene);
  return scene["region"];
}

json DisinfectionService::set_params(const std::string& id, const json& body) {
  auto lock = scene_lock(id);
  std::lock_guard guard(*lock);
  json scene = load_scene(id);
  const double k = number_field(body, "k");
  const double rate = number_field(body, "rate");
  const double v_max = number_field(body, "v_max", 1.0);
  const double accel = number_field(body, "accel", 1.0);
  if (!(k > 0.0 && k <= kMaxRateConstant)) throw bad_request("k must lie in (0, 10] m^2/J");
  if (!match_disinfection_level(rate))
    throw bad_request("rate must be one of 0.9, 0.99, 0.999, 0.9999, 0.99999");
  if (!(v_max > 0.0)) throw bad_request("v_max must be positive");
  if (!(accel > 0.0)) throw bad_request("accel must be positive");
  bool lamp_on = false;
  if (body.contains("lamp_on")) {
    if (!body.at("lamp_on").is_boolean()) throw bad_request("'lamp_on' must be a boolean");
    lamp_on = body.at("lamp_on").get<bool>();
  }
  std::string motion = "trapezoidal";
  if (body.contains("motion")) {
    if (!body.at("motion").is_string()) throw bad_request("'motion' must be a string");
    motion = body.at("motion").get<std::string>();
    if (motion != "constant" && motion != "trapezoidal")
      throw bad_request("motion must be 'constant' or 'trapezoidal'");
  }
  const DisinfectionSpec spec(k, rate);
  json params{{"k", spec.k()},
              {"rate", spec.rate()},
              {"required_dose_J_m2", spec.required_dose()},
              {"v_max", v_max},
              {"accel", accel},
              {"lamp_on", lamp_on},
              {"motion", motion}};
  if (body.contains("pass_spacing_m") && !body.at("pass_spacing_m").is_null()) {
    const double spacing = number_field(body, "pass_spacing_m");
    if (!(spacing > 0.0)) throw bad_request("pass_spacing_m must be positive");
    params["pass_spacing_m"] = spacing;
  }
  scene["params"] = params;
  scene["plan"] = nullptr;
  store_.put(Store::Kind::scene, id, scene);
  return params;
}

json DisinfectionService::set_profile(const std::string& id, const json& body) {
  auto lock = scene_lock(id);
  std::lock_guard guard(*lock);
  json scene = load_scene(id);
  if (!body.is_object() || !body.contains("profile_id") || !body.at("profile_id").is_string())
    throw bad_request("missing field 'profile_id'");
  const auto profile_id = body.at("profile_id").get<std::string>();
  get_profile(profile_id);
  scene["profile_id"] = profile_id;
  scene["plan"] = nullptr;
  store_.put(Store::Kind::scene, id, scene);
  return scene;
}

json DisinfectionService::plan(const std::string& id) {
  auto lock = scene_lock(id);
  std::lock_guard guard(*lock);
  json scene = load_scene(id);
  if (scene.at("region").is_null()) throw ServiceError(409, "scene has no region; set one first");
  if (scene.at("params").is_null()) throw ServiceError(409, "scene has no parameters; set them first");
  const json profile_doc = get_profile(scene.at("profile_id").get<std::string>());
  try {
    const CoveragePlan plan = make_plan(io::profile_from_json(profile_doc.at("profile")),
                                        region_from(scene), scenario_from(scene.at("params")));
    scene["plan"] = io::plan_to_json(plan);
  } catch (const PlanningError& e) {
    throw bad_request(e.what());
  } catch (const DomainError& e) {
    throw bad_request(e.what());
  }
  store_.put(Store::Kind::scene, id, scene);
  return scene["plan"];
}

json DisinfectionService::execute(const std::string& id) {
  auto lock = scene_lock(id);
  std::lock_guard guard(*lock);
  json scene = load_scene(id);
  if (scene.at("plan").is_null()) throw ServiceError(409, "scene has no current plan; plan first");
  const json profile_doc = get_profile(scene.at("profile_id").get<std::string>());

  auto run_channel = std::make_shared<RunChannel>();
  const std::string run_id = store_.new_id("run");
  {
    std::lock_guard registry(registry_mutex_);
    if (active_scenes_.count(id)) throw ServiceError(409, "scene already has a run in flight");
    active_scenes_.insert(id);
    channels_[run_id] = run_channel;
  }
  json run{{"id", run_id},
           {"scene_id", id},
           {"state", "pending"},
           {"created", now_iso()},
           {"finished", nullptr},
           {"plan", scene.at("plan")},
           {"params", scene.at("params")},
           {"profile_id", scene.at("profile_id")}};
  store_.put(Store::Kind::run, run_id, run);
  scene["run_ids"].push_back(run_id);
  store_.put(Store::Kind::scene, id, scene);

  std::lock_guard registry(registry_mutex_);
  workers_.emplace_back(&DisinfectionService::run_worker, this, run_id, scene, profile_doc, run_channel);
  return json{{"run_id", run_id}, {"state", "pending"}};
}

void DisinfectionService::run_worker(std::string run_id, json scene, json profile_doc,
                                     std::shared_ptr<RunChannel> channel) {
  const std::string scene_id = scene.at("id").get<std::string>();
  auto run = *store_.get(Store::Kind::run, run_id);
  run["state"] = "running";
  store_.put(Store::Kind::run, run_id, run);

  auto publish = [&channel](RunEvent event, bool finished) {
    {
      std::lock_guard lock(channel->mutex);
      channel->events.push_back(std::move(event));
      channel->finished = finished;
    }
    channel->cv.notify_all();
  };

  json done_event;
  try {
    const IrradianceProfile profile = io::profile_from_json(profile_doc.at("profile"));
    const RegionSpec region = region_from(scene);
    const ScenarioParams params = scenario_from(scene.at("params"));
    const CoveragePlan plan = io::plan_from_json(scene.at("plan"));
    const auto& surface = scene.at("surface");
    DoseGrid grid = surface_grid(region, surface.at("width_m").get<double>(),
                                 surface.at("length_m").get<double>(),
                                 surface.at("resolution_m").get<double>());
    const double d_req = plan.d_req;
    auto artifacts = run_plan(profile, region, plan, params, std::move(grid),
                              [&](const ProgressSnapshot& s) {
                                json data{{"t_s", s.t},
                                          {"x_m", s.position.x},
                                          {"y_m", s.position.y},
                                          {"speed_m_s", s.speed},
                                          {"heatmap", io::heatmap_export(s.grid, d_req)}};
                                publish({"progress", data.dump()}, false);
                              });
    write_run_artifacts(store_.run_dir(run_id), artifacts);
    const json report = io::report_to_json(artifacts.report);
    run["state"] = "done";
    run["elapsed_s"] = artifacts.result.elapsed;
    run["report"] = report;
    done_event = {{"state", "done"}, {"report", report}};
  } catch (const std::exception& e) {
    run["state"] = "failed";
    run["error"] = e.what();
    done_event = {{"state", "failed"}, {"error", e.what()}};
  }
  run["finished"] = now_iso();
  store_.put(Store::Kind::run, run_id, run);
  {
    std::lock_guard registry(registry_mutex_);
    active_scenes_.erase(scene_id);
  }
  publish({"done", done_event.dump()}, true);
}

std::shared_ptr<DisinfectionService::RunChannel> DisinfectionService::channel(
    const std::string& run_id) const {
  {
    std::lock_guard registry(registry_mutex_);
    auto it = channels_.find(run_id);
    if (it != channels_.end()) return it->second;
  }
  // Runs from an earlier process: replay only the terminal event.
  const json run = get_run(run_id);
  const auto state = run.value("state", "");
  auto replay = std::make_shared<RunChannel>();
  json data{{"state", state}};
  if (run.contains("report")) data["report"] = run.at("report");
  if (run.contains("error")) data["error"] = run.at("error");
  replay->events.push_back({"done", data.dump()});
  replay->finished = true;
  return replay;
}

json DisinfectionService::get_run(const std::string& id) const {
  auto run = store_.get(Store::Kind::run, id);
  if (!run) throw ServiceError(404, "unknown run '" + id + "'");
  return *run;
}

std::string DisinfectionService::run_artifact(const std::string& id, const std::string& name) const {
  static const std::set<std::string> allowed = {"heatmap.json", "report.json", "sensors.csv",
                                                "traces.csv", "telemetry.jsonl"};
  if (!allowed.count(name)) throw ServiceError(404, "unknown artifact '" + name + "'");
  const json run = get_run(id);
  if (run.value("state", "") != "done")
    throw ServiceError(409, "run '" + id + "' is " + run.value("state", "unknown"));
  return io::read_file(store_.run_dir(id) / name);
}

bool DisinfectionService::next_events(const std::string& run_id, std::size_t from,
                                      std::vector<RunEvent>& out,
                                      std::chrono::milliseconds timeout) const {
  auto ch = channel(run_id);
  std::unique_lock lock(ch->mutex);
  ch->cv.wait_for(lock, timeout, [&] { return ch->events.size() > from || ch->finished; });
  for (std::size_t i = from; i < ch->events.size(); ++i) out.push_back(ch->events[i]);
  return !ch->finished;
}

void DisinfectionService::wait_for_run(const std::string& run_id) const {
  auto ch = channel(run_id);
  std::unique_lock lock(ch->mutex);
  ch->cv.wait(lock, [&] { return ch->finished; });
}

}  // namespace uvgi::service
