#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "rfla/external_oracle.hpp"

namespace rfla::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Bad input files or arguments; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
  if (!out) throw UsageError("short write to " + path.string());
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw std::invalid_argument("not a number: '" + item + "'");
    }
  }
  return out;
}

std::string status_name(AttackStatus s) {
  switch (s) {
    case AttackStatus::Success: return "success";
    case AttackStatus::Failed: return "failed";
    case AttackStatus::OracleFailure: return "oracle_error";
  }
  return "unknown";
}

/// Image, permission mask and oracle shared by the attack-style commands.
struct Session {
  ImageBuffer image;
  MaskBuffer permission;
  std::unique_ptr<Oracle> oracle;
};

MaskBuffer load_permission(const AttackConfig& config, int width, int height) {
  if (config.mask.empty()) return MaskBuffer(width, height, 1);
  MaskBuffer mask = read_mask(config.mask);
  if (mask.width() != width || mask.height() != height) {
    throw UsageError("mask " + config.mask + " does not match the image size");
  }
  return mask;
}

Session open_session(const AttackConfig& config, const fs::path& image_path) {
  Session s;
  s.image = read_image(image_path);
  s.permission = load_permission(config, s.image.width(), s.image.height());
  s.oracle = make_oracle(config.oracle, s.image.width(), s.image.height());
  return s;
}

FitnessMode fitness_mode(const AttackConfig& config, std::size_t label) {
  if (config.target) return Targeted{*config.target};
  return Untargeted{label};
}

std::size_t resolve_label(const std::optional<std::size_t>& label, Session& s) {
  if (label) return *label;
  return s.oracle->predict_one(s.image).argmax();
}

json info_json(const OracleInfo& info) {
  return {{"protocol", info.protocol}, {"num_classes", info.num_classes}, {"name", info.name}};
}

json manifest(const std::string& command, const AttackConfig& config, json inputs, const OracleInfo& info) {
  return {{"tool", "rfla"},          {"version", kVersion},  {"command", command},
          {"inputs", std::move(inputs)}, {"config", config.to_json()}, {"seed", config.seed},
          {"oracle", info_json(info)}};
}

json result_json(const AttackResult& r, std::size_t label, const AttackConfig& config) {
  json j;
  j["success"] = r.success;
  j["status"] = status_name(r.status);
  j["label"] = label;
  j["target"] = config.target ? json(*config.target) : json(nullptr);
  j["shape"] = config.shape;
  j["queries"] = r.queries;
  j["iterations"] = r.iterations;
  j["best_fitness"] = std::isfinite(r.best_fitness) ? json(r.best_fitness) : json(nullptr);
  j["particle"] = r.best ? particle_to_json(*r.best) : json(nullptr);
  j["fitness_trace"] = r.trace;
  j["clean_probs"] = r.clean_scores.probs;
  j["adversarial_probs"] = r.adversarial_scores ? json(r.adversarial_scores->probs) : json(nullptr);
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

AttackResult run_configured(const AttackConfig& config, const Session& s, Oracle& oracle, const FitnessMode& mode) {
  const auto options = config.attack_options();
  return config.random_search ? random_search_baseline(s.image, s.permission, oracle, mode, options)
                              : attack(s.image, s.permission, oracle, mode, options);
}

int exit_for(const AttackResult& r) {
  switch (r.status) {
    case AttackStatus::Success: return kOk;
    case AttackStatus::Failed: return kAttackFailed;
    case AttackStatus::OracleFailure: return kOracleError;
  }
  return kAttackFailed;
}

/// Runs `body` and maps exceptions onto exit codes.
template <typename F>
int guarded(std::ostream& log, F&& body) {
  try {
    return body();
  } catch (const OracleError& e) {
    log << "oracle error: " << e.what() << "\n";
    return kOracleError;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kUsageError;
  }
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UsageError(dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png" || ext == ".ppm") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::map<std::string, std::size_t> read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open labels file " + path.string());
  std::map<std::string, std::size_t> labels;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected TAB");
    std::size_t label = 0;
    const std::string value = line.substr(tab + 1);
    const auto res = std::from_chars(value.data(), value.data() + value.size(), label);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": bad class index '" + value + "'");
    }
    labels[line.substr(0, tab)] = label;
  }
  return labels;
}

Particle load_particle(const fs::path& path) {
  const json doc = read_json(path);
  const json& p = doc.contains("particle") ? doc.at("particle") : doc;
  if (p.is_null()) throw UsageError(path.string() + " holds no particle");
  try {
    return particle_from_json(p);
  } catch (const json::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

struct SweepRow {
  std::vector<std::string> params;
  std::optional<Particle> particle;  // empty: skipped
};

}  // namespace

void AttackConfig::validate() const {
  (void)parse_shape(shape);
  if (iters < 0) throw std::invalid_argument("--iters must be non-negative");
  if (swarm < 1 || subswarm < 1) throw std::invalid_argument("--swarm and --subswarm must be at least 1");
  if (!(alpha_max >= 0.0 && alpha_max <= 1.0)) throw std::invalid_argument("--alpha-max must lie in [0, 1]");
  if (!(line_thickness > 0.0)) throw std::invalid_argument("--line-thickness must be positive");
}

AttackOptions AttackConfig::attack_options() const {
  validate();
  AttackOptions o;
  o.kind = parse_shape(shape);
  o.pso.swarm_size = swarm;
  o.pso.subswarm_size = subswarm;
  o.pso.max_iter = iters;
  o.pso.seed = seed;
  o.alpha_max = alpha_max;
  o.render.line_thickness = line_thickness;
  if (palette == "nominal") {
    o.palette = Palette::nominal();
  } else if (palette == "white") {
    o.palette = Palette::single("white", {255, 255, 255});
  } else if (!palette.empty()) {
    o.palette = Palette::from_json_file(palette);
  }
  return o;
}

json AttackConfig::to_json() const {
  return {{"shape", shape},
          {"iters", iters},
          {"swarm", swarm},
          {"subswarm", subswarm},
          {"seed", seed},
          {"mask", mask},
          {"palette", palette},
          {"oracle", oracle},
          {"target", target ? json(*target) : json(nullptr)},
          {"alpha_max", alpha_max},
          {"line_thickness", line_thickness},
          {"random_search", random_search},
          {"out", out}};
}

AttackConfig AttackConfig::from_json(const json& j) {
  AttackConfig c;
  c.shape = j.at("shape").get<std::string>();
  c.iters = j.at("iters").get<int>();
  c.swarm = j.at("swarm").get<int>();
  c.subswarm = j.at("subswarm").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.mask = j.at("mask").get<std::string>();
  c.palette = j.at("palette").get<std::string>();
  c.oracle = j.at("oracle").get<std::string>();
  if (!j.at("target").is_null()) c.target = j.at("target").get<std::size_t>();
  c.alpha_max = j.at("alpha_max").get<double>();
  c.line_thickness = j.at("line_thickness").get<double>();
  c.random_search = j.value("random_search", false);
  c.out = j.at("out").get<std::string>();
  return c;
}

std::unique_ptr<Oracle> make_oracle(const std::string& spec, int width, int height) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);

  if (kind == "uniform") {
    const auto k = arg.empty() ? std::vector<double>{10} : parse_numbers(arg);
    if (k.size() != 1 || k[0] < 2 || k[0] != std::floor(k[0])) throw std::invalid_argument("uniform:K needs K >= 2");
    return std::make_unique<UniformOracle>(static_cast<std::size_t>(k[0]));
  }
  if (kind == "planted") {
    PlantedRegion region;
    region.x = (width - region.size) / 2;
    region.y = (height - region.size) / 2;
    if (!arg.empty()) {
      const auto v = parse_numbers(arg);
      if (v.size() != 2 && v.size() != 4) throw std::invalid_argument("planted:X,Y[,THRESHOLD,SCALE]");
      region.x = static_cast<int>(v[0]);
      region.y = static_cast<int>(v[1]);
      if (v.size() == 4) {
        region.threshold = v[2];
        region.scale = v[3];
      }
    }
    return std::make_unique<PlantedRegionOracle>(region);
  }
  if (kind == "linear") {
    if (arg.empty()) throw std::invalid_argument("linear:WEIGHTS.json needs a path");
    return std::make_unique<LinearSoftmaxOracle>(LinearSoftmaxOracle::from_json_file(arg));
  }
  if (kind == "cmd") {
    if (arg.empty()) throw std::invalid_argument("cmd:COMMAND needs a command");
    return std::make_unique<ExternalOracle>(spawn_process(arg));
  }
  if (kind == "tcp") {
    const auto sep = arg.rfind(':');
    if (sep == std::string::npos) throw std::invalid_argument("tcp:HOST:PORT");
    const int port = std::stoi(arg.substr(sep + 1));
    if (port <= 0 || port > 65535) throw std::invalid_argument("tcp port out of range");
    return std::make_unique<ExternalOracle>(connect_tcp(arg.substr(0, sep), static_cast<std::uint16_t>(port)));
  }
  throw std::invalid_argument("unknown oracle '" + spec + "'");
}

json particle_to_json(const Particle& p) {
  return {{"cx", p.cx}, {"cy", p.cy}, {"r", p.r}, {"alpha", p.alpha}, {"rgb", p.rgb}, {"angles", p.angles}};
}

Particle particle_from_json(const json& j) {
  Particle p;
  p.cx = j.at("cx").get<double>();
  p.cy = j.at("cy").get<double>();
  p.r = j.at("r").get<double>();
  p.alpha = j.at("alpha").get<double>();
  p.rgb = j.at("rgb").get<std::array<double, 3>>();
  p.angles = j.at("angles").get<std::vector<double>>();
  return p;
}

int cmd_attack(const AttackConfig& config, const AttackInputs& inputs, std::ostream& log) {
  return guarded(log, [&] {
    config.validate();
    Session s = open_session(config, inputs.image);
    const std::size_t label = resolve_label(inputs.label, s);
    const auto mode = fitness_mode(config, label);
    const AttackResult r = run_configured(config, s, *s.oracle, mode);

    const fs::path out(config.out);
    fs::create_directories(out);
    json inputs_json{{"image", inputs.image.string()},
                     {"label", inputs.label ? json(*inputs.label) : json(nullptr)}};
    write_json(out / "manifest.json", manifest("attack", config, std::move(inputs_json), s.oracle->info()));
    json result = result_json(r, label, config);
    result["artifacts"] = {{"adversarial", "adversarial.png"}, {"manifest", "manifest.json"}};
    write_png(out / "adversarial.png", r.adversarial);
    write_json(out / "result.json", result);

    log << (r.success ? "success" : status_name(r.status)) << ": " << r.queries << " queries, " << r.iterations
        << " iterations\n";
    if (!r.error.empty()) log << "oracle error: " << r.error << "\n";
    return exit_for(r);
  });
}

int cmd_eval(const AttackConfig& config, const EvalInputs& inputs, std::ostream& log) {
  return guarded(log, [&] {
    config.validate();
    const fs::path labels_path = inputs.labels.empty() ? inputs.dataset / "labels.txt" : inputs.labels;
    const auto labels = read_labels(labels_path);
    const auto images = list_images(inputs.dataset);
    if (images.empty()) throw UsageError("no .png or .ppm images in " + inputs.dataset.string());

    const fs::path out(config.out);
    fs::create_directories(out / "adversarial");
    std::unique_ptr<Oracle> oracle;
    std::ostringstream csv;
    csv << "image,label,status,success,queries,iterations,best_fitness\n";
    json skipped = json::array();
    std::size_t attacked = 0, flipped = 0, oracle_errors = 0;

    for (std::size_t idx = 0; idx < images.size(); ++idx) {
      const std::string name = images[idx].filename().string();
      const auto it = labels.find(name);
      if (it == labels.end()) {
        log << "warning: no label for " << name << ", skipped\n";
        skipped.push_back(name);
        csv << name << ",,skipped,,,,\n";
        continue;
      }
      AttackConfig per_image = config;
      per_image.seed = config.seed + idx;
      Session s;
      s.image = read_image(images[idx]);
      s.permission = load_permission(config, s.image.width(), s.image.height());
      if (!oracle) oracle = make_oracle(config.oracle, s.image.width(), s.image.height());
      const AttackResult r = run_configured(per_image, s, *oracle, fitness_mode(config, it->second));
      ++attacked;
      if (r.success) ++flipped;
      if (r.status == AttackStatus::OracleFailure) ++oracle_errors;
      write_png(out / "adversarial" / (images[idx].stem().string() + ".png"), r.adversarial);
      csv << name << ',' << it->second << ',' << status_name(r.status) << ',' << (r.success ? 1 : 0) << ','
          << r.queries << ',' << r.iterations << ',' << (std::isfinite(r.best_fitness) ? fmt_double(r.best_fitness) : "")
          << '\n';
    }

    const double asr = attacked ? static_cast<double>(flipped) / static_cast<double>(attacked) : 0.0;
    write_text(out / "eval.csv", csv.str());
    write_json(out / "eval.json", {{"total", attacked},
                                   {"flipped", flipped},
                                   {"asr", asr},
                                   {"skipped", skipped},
                                   {"oracle_errors", oracle_errors}});
    json inputs_json{{"dataset", inputs.dataset.string()}, {"labels", labels_path.string()}};
    write_json(out / "manifest.json",
               manifest("eval", config, std::move(inputs_json), oracle ? oracle->info() : OracleInfo{}));
    log << "ASR " << flipped << "/" << attacked << " = " << asr << "\n";
    if (oracle_errors) return static_cast<int>(kOracleError);
    return flipped == attacked ? static_cast<int>(kOk) : static_cast<int>(kAttackFailed);
  });
}

int cmd_sweep(SweepKind kind, const AttackConfig& config, const SweepInputs& inputs, std::ostream& log) {
  return guarded(log, [&] {
    config.validate();
    Session s = open_session(config, inputs.image);
    const std::size_t label = resolve_label(inputs.label, s);
    const auto mode = fitness_mode(config, label);
    const ShapeKind shape = parse_shape(config.shape);
    const RenderOptions render{config.line_thickness};

    Particle base;
    if (!inputs.particle.empty()) {
      base = load_particle(inputs.particle);
    } else {
      const AttackResult r = run_configured(config, s, *s.oracle, mode);
      if (r.status == AttackStatus::OracleFailure) throw OracleError(r.error);
      if (!r.best) throw UsageError("the attack produced no particle to sweep (clean image already adversarial)");
      base = *r.best;
    }
    if (static_cast<int>(base.angles.size()) != angle_count(shape)) {
      throw UsageError("particle has " + std::to_string(base.angles.size()) + " angles but shape " + config.shape +
                       " needs " + std::to_string(angle_count(shape)));
    }

    std::vector<SweepRow> rows;
    std::string header;
    std::string name;
    switch (kind) {
      case SweepKind::Alpha:
        name = "sweep_alpha";
        header = "alpha";
        for (int i = 0; i <= 100; ++i) {
          Particle p = base;
          p.alpha = i / 100.0;
          rows.push_back({{fmt_double(p.alpha)}, p});
        }
        break;
      case SweepKind::Color:
        name = "sweep_color";
        header = "red,green,blue";
        for (int r = 0; r < 256; r += 16) {
          for (int g = 0; g < 256; g += 16) {
            for (int b = 0; b < 256; b += 16) {
              Particle p = base;
              p.rgb = {double(r), double(g), double(b)};
              rows.push_back({{std::to_string(r), std::to_string(g), std::to_string(b)}, p});
            }
          }
        }
        break;
      case SweepKind::Position:
        name = "sweep_position";
        header = "cx,cy";
        for (int cx = 0; cx < s.image.width(); cx += 2) {
          for (int cy = 0; cy < s.image.height(); cy += 2) {
            SweepRow row{{std::to_string(cx), std::to_string(cy)}, std::nullopt};
            if (s.permission.at(cx, cy)) {
              Particle p = base;
              p.cx = cx;
              p.cy = cy;
              row.particle = p;
            }
            rows.push_back(std::move(row));
          }
        }
        break;
    }

    std::ostringstream csv;
    csv << header << ",confidence,success" << (kind == SweepKind::Position ? ",masked" : "") << "\n";
    constexpr std::size_t kBatch = 256;
    for (std::size_t start = 0; start < rows.size(); start += kBatch) {
      const std::size_t end = std::min(rows.size(), start + kBatch);
      std::vector<ImageBuffer> batch;
      for (std::size_t i = start; i < end; ++i) {
        if (rows[i].particle) batch.push_back(apply_particle(s.image, s.permission, *rows[i].particle, shape, render));
      }
      std::vector<OracleScores> scores;
      if (!batch.empty()) scores = s.oracle->predict(batch);
      std::size_t k = 0;
      for (std::size_t i = start; i < end; ++i) {
        for (const auto& v : rows[i].params) csv << v << ',';
        if (rows[i].particle) {
          const auto& sc = scores[k++];
          csv << fmt_double(sc.probs.at(label)) << ',' << (success(sc, mode) ? 1 : 0);
          if (kind == SweepKind::Position) csv << ",0";
        } else {
          csv << ",,1";
        }
        csv << '\n';
      }
    }

    const fs::path out(config.out);
    fs::create_directories(out);
    write_text(out / (name + ".csv"), csv.str());
    json inputs_json{{"image", inputs.image.string()},
                     {"label", inputs.label ? json(*inputs.label) : json(nullptr)},
                     {"particle_file", inputs.particle.string()},
                     {"particle", particle_to_json(base)}};
    write_json(out / (name + ".manifest.json"),
               manifest(name == "sweep_alpha" ? "sweep-alpha" : name == "sweep_color" ? "sweep-color" : "sweep-position",
                        config, std::move(inputs_json), s.oracle->info()));
    log << "wrote " << rows.size() << " rows to " << (out / (name + ".csv")).string() << "\n";
    return static_cast<int>(kOk);
  });
}

int cmd_mask(const fs::path& images_dir, double threshold, const fs::path& out, std::ostream& log) {
  return guarded(log, [&] {
    std::vector<ImageBuffer> images;
    for (const auto& path : list_images(images_dir)) images.push_back(read_image(path));
    if (images.empty()) throw UsageError("no .png or .ppm images in " + images_dir.string());
    const MaskBuffer mask = mask_from_average(images, threshold);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_mask(out, mask);
    log << "mask from " << images.size() << " images: " << mask.count() << " of "
        << mask.data().size() << " pixels allowed\n";
    return static_cast<int>(kOk);
  });
}

int cmd_replay(const fs::path& manifest_path, const std::optional<fs::path>& out, std::ostream& log) {
  json doc;
  AttackConfig config;
  try {
    doc = read_json(manifest_path);
    config = AttackConfig::from_json(doc.at("config"));
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kUsageError;
  }
  if (out) config.out = out->string();
  const json& in = doc.at("inputs");
  const std::string command = doc.at("command").get<std::string>();
  auto label = [&]() -> std::optional<std::size_t> {
    if (!in.contains("label") || in.at("label").is_null()) return std::nullopt;
    return in.at("label").get<std::size_t>();
  };
  if (command == "attack") return cmd_attack(config, {in.at("image").get<std::string>(), label()}, log);
  if (command == "eval") {
    return cmd_eval(config, {in.at("dataset").get<std::string>(), in.at("labels").get<std::string>()}, log);
  }
  const std::map<std::string, SweepKind> sweeps{
      {"sweep-alpha", SweepKind::Alpha}, {"sweep-color", SweepKind::Color}, {"sweep-position", SweepKind::Position}};
  if (const auto it = sweeps.find(command); it != sweeps.end()) {
    return cmd_sweep(it->second, config,
                     {in.at("image").get<std::string>(), label(), in.at("particle_file").get<std::string>()}, log);
  }
  log << "error: manifest command '" << command << "' cannot be replayed\n";
  return kUsageError;
}

int run(int argc, const char* const* argv, std::ostream& log) {
  CLI::App app{"Reflected-light shape attacks against black-box image classifiers"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  AttackConfig config;
  std::optional<std::size_t> label;
  std::size_t target = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--shape", config.shape, "line, triangle, rectangle, pentagon or hexagon")
        ->check(CLI::IsMember({"line", "triangle", "rectangle", "pentagon", "hexagon"}))
        ->capture_default_str();
    sub->add_option("--iters", config.iters, "Maximum PSO iterations")->capture_default_str();
    sub->add_option("--swarm", config.swarm, "Number of circles")->capture_default_str();
    sub->add_option("--subswarm", config.subswarm, "Shapes per circle")->capture_default_str();
    sub->add_option("--seed", config.seed, "Random seed")->capture_default_str();
    sub->add_option("--mask", config.mask, "Permission mask PNG (0 = frozen, 255 = paintable)");
    sub->add_option("--palette", config.palette, "Restrict colors: nominal, white or a palette JSON file");
    sub->add_option("--oracle", config.oracle,
                    "uniform[:K] | planted[:X,Y[,T,S]] | linear:WEIGHTS.json | cmd:COMMAND | tcp:HOST:PORT")
        ->capture_default_str();
    sub->add_option("--target", target, "Target class (enables the targeted attack)");
    sub->add_option("--alpha-max", config.alpha_max, "Upper bound on transparency")->capture_default_str();
    sub->add_option("--line-thickness", config.line_thickness, "Stroke width of line shapes in pixels")
        ->capture_default_str();
    sub->add_flag("--random-search", config.random_search, "Random-search baseline instead of PSO");
    sub->add_option("--out", config.out, "Output directory")->capture_default_str();
  };

  std::string image;
  auto* attack_cmd = app.add_subcommand("attack", "Attack one image");
  add_common(attack_cmd);
  attack_cmd->add_option("--image", image, "Input image (PNG or PPM)")->required();
  attack_cmd->add_option("--label", label, "True class; defaults to the clean prediction");

  EvalInputs eval_inputs;
  std::string labels_path;
  auto* eval_cmd = app.add_subcommand("eval", "Attack every image of a dataset and report the success rate");
  add_common(eval_cmd);
  eval_cmd->add_option("--dataset", eval_inputs.dataset, "Directory of PNG/PPM images")->required();
  eval_cmd->add_option("--labels", labels_path, "filename<TAB>class file (default: DATASET/labels.txt)");

  std::string particle;
  std::map<CLI::App*, SweepKind> sweep_cmds;
  for (auto [cmd_name, kind, help] : {std::tuple{"sweep-alpha", SweepKind::Alpha, "Vary transparency 0..1 by 0.01"},
                                      std::tuple{"sweep-color", SweepKind::Color, "Vary RGB over a 16-step grid"},
                                      std::tuple{"sweep-position", SweepKind::Position, "Move the circle by 2 px"}}) {
    auto* sub = app.add_subcommand(cmd_name, help);
    add_common(sub);
    sub->add_option("--image", image, "Input image (PNG or PPM)")->required();
    sub->add_option("--label", label, "True class; defaults to the clean prediction");
    sub->add_option("--particle", particle, "Result or particle JSON; default runs an attack first");
    sweep_cmds[sub] = kind;
  }

  std::string mask_images;
  std::string mask_out = "mask.png";
  double threshold = 128.0;
  auto* mask_cmd = app.add_subcommand("mask", "Build a permission mask by averaging images");
  mask_cmd->add_option("--images", mask_images, "Directory of PNG/PPM images")->required();
  mask_cmd->add_option("--threshold", threshold, "Mean gray level at or above which pixels are allowed")
      ->check(CLI::Range(0.0, 255.0))
      ->capture_default_str();
  mask_cmd->add_option("--out", mask_out, "Output mask PNG")->capture_default_str();

  std::string manifest_path;
  std::optional<std::string> replay_out;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay_cmd->add_option("manifest", manifest_path, "manifest JSON")->required();
  replay_cmd->add_option("--out", replay_out, "Output directory (default: the recorded one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    log << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    log << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    log << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    log << "error: " << e.what() << "\n";
    return kUsageError;
  }

  auto* chosen = app.get_subcommands().front();
  if (const auto* opt = chosen->get_option_no_throw("--target"); opt && opt->count()) config.target = target;

  if (chosen == attack_cmd) return cmd_attack(config, {image, label}, log);
  if (chosen == eval_cmd) {
    eval_inputs.labels = labels_path;
    return cmd_eval(config, eval_inputs, log);
  }
  if (const auto it = sweep_cmds.find(chosen); it != sweep_cmds.end()) {
    return cmd_sweep(it->second, config, {image, label, particle}, log);
  }
  if (chosen == mask_cmd) return cmd_mask(mask_images, threshold, mask_out, log);
  if (chosen == replay_cmd) {
    return cmd_replay(manifest_path, replay_out ? std::optional<fs::path>(*replay_out) : std::nullopt, log);
  }
  return kUsageError;
}

}  // namespace rfla::cli
