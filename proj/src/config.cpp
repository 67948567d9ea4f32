#include "scorelab/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "scorelab/io.hpp"

namespace scorelab {
namespace {

struct Entry {
  std::string section;
  std::string key;
  std::vector<std::string> items;  // one item for a scalar
  bool is_list = false;
  std::size_t line = 0;
};

class Parser {
 public:
  explicit Parser(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(std::size_t line, const std::string& msg) const {
    throw ConfigError(source_ + ":" + std::to_string(line) + ": " + msg);
  }

  std::vector<Entry> entries(std::string_view text) const {
    static const std::set<std::string, std::less<>> sections{
        "experiment", "target", "dataset", "sampler", "score_error", "kde_compare", "bounds"};
    YAML::Node root;
    try {
      root = YAML::Load(std::string(text));
    } catch (const YAML::Exception& e) {
      fail(e.mark.line + 1, e.msg);
    }
    std::vector<Entry> out;
    if (root.IsNull()) return out;
    if (!root.IsMap()) fail(line_of(root), "expected a mapping of sections");
    std::set<std::string> seen_sections, seen;
    for (const auto& sec : root) {
      const std::string section = sec.first.Scalar();
      const std::size_t sec_line = line_of(sec.first);
      if (!sections.contains(section)) fail(sec_line, "unknown section '" + section + "'");
      if (!seen_sections.insert(section).second) fail(sec_line, "duplicate section '" + section + "'");
      if (sec.second.IsNull()) continue;
      if (!sec.second.IsMap()) fail(sec_line, "section '" + section + "' must be a mapping");
      for (const auto& kv : sec.second) {
        Entry e{section, kv.first.Scalar(), {}, false, line_of(kv.first)};
        if (!seen.insert(section + "." + e.key).second)
          fail(e.line, "duplicate key " + section + "." + e.key);
        const auto& value = kv.second;
        if (value.IsScalar()) {
          e.items.push_back(value.Scalar());
        } else if (value.IsSequence()) {
          e.is_list = true;
          for (const auto& item : value) {
            if (!item.IsScalar()) fail(line_of(item), e.key + ": list items must be plain values");
            e.items.push_back(item.Scalar());
          }
          if (e.items.empty()) fail(e.line, e.key + ": empty list");
        } else if (value.IsNull()) {
          fail(e.line, e.key + ": missing value");
        } else {
          fail(e.line, e.key + ": expected a value or a list");
        }
        out.push_back(std::move(e));
      }
    }
    return out;
  }

  const std::string& scalar(const Entry& e) const {
    if (e.is_list) fail(e.line, e.key + ": expected a single value, got a list");
    return e.items.front();
  }

  double real(const Entry& e, const std::string& text) const {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (text.empty() || res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
      fail(e.line, e.key + ": expected a finite number, got '" + text + "'");
    return v;
  }
  double real(const Entry& e) const { return real(e, scalar(e)); }

  template <class Int>
  Int integer(const Entry& e, const std::string& text) const {
    Int v = 0;
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (text.empty() || res.ec != std::errc() || res.ptr != end)
      fail(e.line, e.key + ": expected a non-negative integer, got '" + text + "'");
    return v;
  }
  template <class Int>
  Int integer(const Entry& e) const {
    return integer<Int>(e, scalar(e));
  }

  // A list, or a single value read as a one-element list.
  std::vector<std::string> words(const Entry& e) const {
    for (const auto& w : e.items)
      if (w.empty()) fail(e.line, e.key + ": empty list item");
    return e.items;
  }

  std::vector<double> reals(const Entry& e) const {
    std::vector<double> out;
    for (const auto& w : words(e)) out.push_back(real(e, w));
    return out;
  }

  std::vector<std::size_t> counts(const Entry& e) const {
    std::vector<std::size_t> out;
    for (const auto& w : words(e)) out.push_back(integer<std::size_t>(e, w));
    return out;
  }

 private:
  static std::size_t line_of(const YAML::Node& n) { return static_cast<std::size_t>(n.Mark().line) + 1; }

  std::string source_;
};

void apply(ExperimentConfig& cfg, const Parser& p, const Entry& e) {
  const std::string id = e.section + "." + e.key;
  cfg.key_lines[id] = e.line;
  if (id == "experiment.kind") {
    const auto kind = experiment_kind_from_string(p.scalar(e));
    if (!kind) p.fail(e.line, "unknown experiment kind '" + p.scalar(e) + "'");
    cfg.kind = *kind;
  } else if (id == "experiment.seed") {
    cfg.seed = p.integer<std::uint64_t>(e);
  } else if (id == "experiment.output") {
    cfg.output = p.scalar(e);
  } else if (id == "target.kind") {
    if (p.scalar(e) == "gaussian")
      cfg.target.kind = TargetSpec::Kind::gaussian;
    else if (p.scalar(e) == "file")
      cfg.target.kind = TargetSpec::Kind::file;
    else
      p.fail(e.line, "target kind must be gaussian or file, got '" + p.scalar(e) + "'");
  } else if (id == "target.mean") {
    cfg.target.mean = p.reals(e);
  } else if (id == "target.variance") {
    cfg.target.variance = p.real(e);
  } else if (id == "target.path") {
    cfg.target.path = p.scalar(e);
  } else if (id == "dataset.size") {
    cfg.dataset_size = p.integer<std::size_t>(e);
  } else if (id == "dataset.radius") {
    cfg.dataset_radius = p.real(e);
  } else if (id == "sampler.horizon") {
    cfg.horizon = p.real(e);
  } else if (id == "sampler.step") {
    cfg.step = p.real(e);
  } else if (id == "sampler.deltas") {
    cfg.deltas = p.reals(e);
  } else if (id == "sampler.samples") {
    cfg.samples = p.integer<std::size_t>(e);
  } else if (id == "sampler.scores") {
    cfg.scores = p.words(e);
  } else if (id == "score_error.sizes") {
    cfg.sizes = p.counts(e);
  } else if (id == "score_error.delta") {
    cfg.error_delta = p.real(e);
  } else if (id == "score_error.horizon") {
    cfg.error_horizon = p.real(e);
  } else if (id == "score_error.grid_step") {
    cfg.error_grid_step = p.real(e);
  } else if (id == "score_error.mc_samples") {
    cfg.mc_samples = p.integer<std::size_t>(e);
  } else if (id == "score_error.repetitions") {
    cfg.repetitions = p.integer<std::size_t>(e);
  } else if (id == "kde_compare.alpha") {
    cfg.alpha = p.real(e);
  } else if (id == "kde_compare.permutations") {
    cfg.permutations = p.integer<std::size_t>(e);
  } else if (id == "kde_compare.bandwidth_factor") {
    cfg.bandwidth_factor = p.real(e);
  } else if (id == "kde_compare.scott_multiplier") {
    cfg.scott_multiplier = p.real(e);
  } else if (id == "bounds.deltas") {
    cfg.bound_deltas = p.reals(e);
  } else if (id == "bounds.horizons") {
    cfg.bound_horizons = p.reals(e);
  } else if (id == "bounds.tv_samples") {
    cfg.tv_samples = p.integer<std::size_t>(e);
  } else if (id == "bounds.random_instances") {
    cfg.random_instances = p.integer<std::size_t>(e);
  } else {
    p.fail(e.line, "unknown key " + id);
  }
}

std::string join(const auto& values, auto&& render) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ", ";
    out += render(v);
  }
  return out;
}

std::string reals_text(const std::vector<double>& v) { return join(v, format_double); }

std::string counts_text(const std::vector<std::size_t>& v) {
  return join(v, [](std::size_t n) { return std::to_string(n); });
}

constexpr std::string_view kFigure2 = R"(# Score approximation error against training-set size.
experiment:
  kind: score-error
  seed: 20240601
  output: out/figure2

target:
  kind: gaussian
  mean: [-5, 5]
  variance: 10

score_error:
  sizes: [100, 200, 500, 1000, 2000]
  delta: 0.02
  horizon: 5
  grid_step: 0.02
  mc_samples: 1000
  repetitions: 10
)";

constexpr std::string_view kFigure3 = R"(# DDPM generation with the empirical optimal and the exact score.
experiment:
  kind: generate
  seed: 20240602
  output: out/figure3

target:
  kind: gaussian
  mean: [-5, 5]
  variance: 10

dataset:
  size: 100

sampler:
  horizon: 5
  step: 0.0005
  deltas: [0, 0.01]
  samples: 1000
  scores: [empirical, exact]
)";

constexpr std::string_view kKdeCompare = R"(# Empirical-score DDPM against the matching Gaussian KDE.
experiment:
  kind: kde-compare
  seed: 20240603
  output: out/kde-compare

target:
  kind: gaussian
  mean: [-5, 5]
  variance: 10

dataset:
  size: 100

sampler:
  horizon: 5
  step: 0.0005
  deltas: 0.01
  samples: 1000

kde_compare:
  alpha: 0.01
  permutations: 500
  bandwidth_factor: 1
  scott_multiplier: 0.1
)";

constexpr std::string_view kBounds = R"(# Total-variation and weighted-average bounds on a dataset scaled into the ball of radius d.
experiment:
  kind: bounds-check
  seed: 20240604
  output: out/bounds

target:
  kind: gaussian
  mean: [-5, 5]
  variance: 10

dataset:
  size: 100
  radius: 2

sampler:
  horizon: 5
  step: 0.0005
  deltas: 0.01
  samples: 1000

kde_compare:
  alpha: 0.01
  permutations: 500

bounds:
  deltas: [0.01, 0.1]
  horizons: [3, 5]
  tv_samples: 100000
  random_instances: 200
)";

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::score_error: return "score-error";
    case ExperimentKind::generate: return "generate";
    case ExperimentKind::kde_compare: return "kde-compare";
    case ExperimentKind::bounds_check: return "bounds-check";
  }
  return "score-error";
}

std::optional<ExperimentKind> experiment_kind_from_string(std::string_view name) {
  for (auto k : {ExperimentKind::score_error, ExperimentKind::generate, ExperimentKind::kde_compare,
                 ExperimentKind::bounds_check})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

void ExperimentConfig::validate() const {
  const auto fail = [this](const std::string& key, const std::string& msg) {
    const auto it = key_lines.find(key);
    const std::string where =
        it == key_lines.end() ? source_name : source_name + ":" + std::to_string(it->second);
    throw ConfigError(where + ": " + key + ": " + msg);
  };
  if (!seed) fail("experiment.seed", "a seed is required (set it in the file or pass --seed)");

  const bool gaussian = target.kind == TargetSpec::Kind::gaussian;
  if (gaussian) {
    if (target.mean.empty()) fail("target.mean", "mean must have at least one coordinate");
    if (!(target.variance > 0.0)) fail("target.variance", "variance must be positive");
  } else {
    if (target.path.empty()) fail("target.path", "a dataset path is required for a file target");
    if (!std::filesystem::exists(target.path))
      fail("target.path", "dataset file not found: " + target.path.string());
  }

  const auto check_dataset = [&] {
    if (gaussian && dataset_size == 0) fail("dataset.size", "dataset must not be empty");
    if (dataset_radius && !(*dataset_radius > 0.0)) fail("dataset.radius", "radius must be positive");
  };
  const auto check_sampler = [&](bool allow_zero_delta) {
    if (!(horizon > 0.0)) fail("sampler.horizon", "horizon must be positive");
    if (!(step > 0.0) || !(step <= horizon)) fail("sampler.step", "step must lie in (0, horizon]");
    if (deltas.empty()) fail("sampler.deltas", "at least one early-stopping time is required");
    for (double d : deltas) {
      if (!(d >= 0.0) || !(d < horizon)) fail("sampler.deltas", "each delta must lie in [0, horizon)");
      if (!allow_zero_delta && d == 0.0) fail("sampler.deltas", "delta must be positive here");
    }
    if (samples == 0) fail("sampler.samples", "sample count must be positive");
  };
  const auto check_test = [&] {
    if (!(alpha > 0.0 && alpha < 1.0)) fail("kde_compare.alpha", "alpha must lie in (0, 1)");
    if (permutations < 200) fail("kde_compare.permutations", "at least 200 permutations are required");
  };

  switch (kind) {
    case ExperimentKind::score_error: {
      if (!gaussian) fail("target.kind", "score-error needs a gaussian target");
      if (sizes.empty()) fail("score_error.sizes", "at least one N is required");
      for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] == 0) fail("score_error.sizes", "N must be positive");
        if (i > 0 && sizes[i] <= sizes[i - 1])
          fail("score_error.sizes", "sizes must be strictly increasing");
      }
      if (!(error_horizon > 0.0)) fail("score_error.horizon", "horizon must be positive");
      if (!(error_delta > 0.0) || !(error_delta < error_horizon))
        fail("score_error.delta", "delta must lie in (0, horizon)");
      if (!(error_grid_step > 0.0)) fail("score_error.grid_step", "grid step must be positive");
      if (mc_samples == 0) fail("score_error.mc_samples", "M must be positive");
      if (repetitions == 0) fail("score_error.repetitions", "repetitions must be positive");
      break;
    }
    case ExperimentKind::generate: {
      check_dataset();
      check_sampler(true);
      check_test();
      if (scores.empty()) fail("sampler.scores", "at least one score is required");
      std::set<std::string> seen;
      for (const auto& s : scores) {
        if (s != "empirical" && s != "exact")
          fail("sampler.scores", "unknown score '" + s + "' (empirical or exact)");
        if (!seen.insert(s).second) fail("sampler.scores", "duplicate score '" + s + "'");
        if (s == "exact" && !gaussian)
          fail("sampler.scores", "the exact score needs a gaussian target");
      }
      break;
    }
    case ExperimentKind::kde_compare: {
      check_dataset();
      check_sampler(false);
      check_test();
      if (!(bandwidth_factor > 0.0)) fail("kde_compare.bandwidth_factor", "factor must be positive");
      if (!(scott_multiplier > 0.0)) fail("kde_compare.scott_multiplier", "multiplier must be positive");
      break;
    }
    case ExperimentKind::bounds_check: {
      check_dataset();
      check_sampler(false);
      check_test();
      if (bound_deltas.empty()) fail("bounds.deltas", "at least one delta is required");
      for (double d : bound_deltas)
        if (!(d > 0.0)) fail("bounds.deltas", "each delta must be positive");
      if (bound_horizons.empty()) fail("bounds.horizons", "at least one horizon is required");
      for (double t : bound_horizons)
        if (!(t > 0.0)) fail("bounds.horizons", "each horizon must be positive");
      if (tv_samples < 2) fail("bounds.tv_samples", "at least two samples are required");
      if (random_instances == 0) fail("bounds.random_instances", "must be positive");
      break;
    }
  }
}

std::string ExperimentConfig::echo() const {
  std::ostringstream out;
  const auto section = [&](const char* name) { out << name << ":\n"; };
  const auto kv = [&](const char* key, const auto& value) { out << "  " << key << ": " << value << "\n"; };
  const auto list = [](const std::string& items) { return "[" + items + "]"; };
  section("experiment");
  kv("kind", to_string(kind));
  kv("seed", seed ? std::to_string(*seed) : std::string("null"));
  section("target");
  if (target.kind == TargetSpec::Kind::gaussian) {
    kv("kind", "gaussian");
    kv("mean", list(reals_text(target.mean)));
    kv("variance", format_double(target.variance));
  } else {
    kv("kind", "file");
    kv("path", target.path.string());
  }
  const auto dataset_block = [&] {
    if (target.kind != TargetSpec::Kind::gaussian && !dataset_radius) return;
    section("dataset");
    if (target.kind == TargetSpec::Kind::gaussian) kv("size", dataset_size);
    if (dataset_radius) kv("radius", format_double(*dataset_radius));
  };
  const auto sampler_block = [&] {
    section("sampler");
    kv("horizon", format_double(horizon));
    kv("step", format_double(step));
    kv("deltas", list(reals_text(deltas)));
    kv("samples", samples);
  };
  const auto test_block = [&](bool full) {
    section("kde_compare");
    kv("alpha", format_double(alpha));
    kv("permutations", permutations);
    if (full) {
      kv("bandwidth_factor", format_double(bandwidth_factor));
      kv("scott_multiplier", format_double(scott_multiplier));
    }
  };
  switch (kind) {
    case ExperimentKind::score_error:
      section("score_error");
      kv("sizes", list(counts_text(sizes)));
      kv("delta", format_double(error_delta));
      kv("horizon", format_double(error_horizon));
      kv("grid_step", format_double(error_grid_step));
      kv("mc_samples", mc_samples);
      kv("repetitions", repetitions);
      break;
    case ExperimentKind::generate:
      dataset_block();
      sampler_block();
      kv("scores", list(join(scores, [](const std::string& s) { return s; })));
      test_block(false);
      break;
    case ExperimentKind::kde_compare:
      dataset_block();
      sampler_block();
      test_block(true);
      break;
    case ExperimentKind::bounds_check:
      dataset_block();
      sampler_block();
      test_block(false);
      section("bounds");
      kv("deltas", list(reals_text(bound_deltas)));
      kv("horizons", list(reals_text(bound_horizons)));
      kv("tv_samples", tv_samples);
      kv("random_instances", random_instances);
      break;
  }
  return out.str();
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["kind"] = to_string(kind);
  j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
  if (target.kind == TargetSpec::Kind::gaussian)
    j["target"] = {{"kind", "gaussian"}, {"mean", target.mean}, {"variance", target.variance}};
  else
    j["target"] = {{"kind", "file"}, {"path", target.path.string()}};
  if (kind != ExperimentKind::score_error) {
    j["dataset"] = nlohmann::json::object();
    if (target.kind == TargetSpec::Kind::gaussian) j["dataset"]["size"] = dataset_size;
    if (dataset_radius) j["dataset"]["radius"] = *dataset_radius;
    j["sampler"] = {{"horizon", horizon}, {"step", step}, {"deltas", deltas}, {"samples", samples}};
  }
  switch (kind) {
    case ExperimentKind::score_error:
      j["score_error"] = {{"sizes", sizes},         {"delta", error_delta},
                          {"horizon", error_horizon}, {"grid_step", error_grid_step},
                          {"mc_samples", mc_samples}, {"repetitions", repetitions}};
      break;
    case ExperimentKind::generate:
      j["sampler"]["scores"] = scores;
      j["kde_compare"] = {{"alpha", alpha}, {"permutations", permutations}};
      break;
    case ExperimentKind::kde_compare:
      j["kde_compare"] = {{"alpha", alpha},
                          {"permutations", permutations},
                          {"bandwidth_factor", bandwidth_factor},
                          {"scott_multiplier", scott_multiplier}};
      break;
    case ExperimentKind::bounds_check:
      j["kde_compare"] = {{"alpha", alpha}, {"permutations", permutations}};
      j["bounds"] = {{"deltas", bound_deltas},
                     {"horizons", bound_horizons},
                     {"tv_samples", tv_samples},
                     {"random_instances", random_instances}};
      break;
  }
  return j;
}

ExperimentConfig parse_config(std::string_view text, const std::string& source_name) {
  const Parser parser(source_name);
  ExperimentConfig cfg;
  cfg.source_name = source_name;
  const auto entries = parser.entries(text);
  for (const auto& e : entries) apply(cfg, parser, e);
  if (!cfg.key_lines.contains("experiment.kind"))
    throw ConfigError(source_name + ": missing experiment.kind");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  auto cfg = parse_config(buf.str(), path.string());
  if (cfg.target.kind == TargetSpec::Kind::file && cfg.target.path.is_relative())
    cfg.target.path = path.parent_path() / cfg.target.path;
  return cfg;
}

std::vector<std::string> preset_names() { return {"figure2", "figure3", "kde-compare", "bounds"}; }

std::string preset_text(const std::string& name) {
  if (name == "figure2") return std::string(kFigure2);
  if (name == "figure3") return std::string(kFigure3);
  if (name == "kde-compare") return std::string(kKdeCompare);
  if (name == "bounds") return std::string(kBounds);
  throw ConfigError("unknown preset '" + name + "' (figure2, figure3, kde-compare, bounds)");
}

ExperimentConfig load_preset(const std::string& name) {
  const std::string bare = name.starts_with("preset:") ? name.substr(7) : name;
  return parse_config(preset_text(bare), "preset:" + bare);
}

}  // namespace scorelab
