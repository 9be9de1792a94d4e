#include "bodyimage/config.hpp"

#include <cctype>
#include <charconv>
#include <set>
#include <type_traits>

#include "bodyimage/error.hpp"
#include "bodyimage/hash.hpp"

namespace bodyimage::config {
namespace {

class TomlParser {
 public:
  explicit TomlParser(const std::string& text) : s_(text) {}

  Table parse() {
    Table table;
    std::string section;
    table[section];
    while (true) {
      skip_blank(true);
      if (pos_ >= s_.size()) break;
      if (s_[pos_] == '[') {
        ++pos_;
        section = bare_key();
        skip_blank(false);
        expect(']');
        if (table.count(section)) error("duplicate section [" + section + "]");
        table[section];
      } else {
        const std::string key = bare_key();
        skip_blank(false);
        expect('=');
        skip_blank(false);
        Value v = value();
        auto& entries = table[section];
        if (entries.count(key)) error("duplicate key '" + key + "'");
        entries.emplace(key, std::move(v));
      }
      skip_blank(false);
      if (pos_ < s_.size() && s_[pos_] != '\n') error("unexpected trailing text");
    }
    if (table[""].empty()) table.erase("");
    return table;
  }

 private:
  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorCode::kConfig, "config line " + std::to_string(line_) + ": " + what);
  }

  // Skips spaces and comments; newlines too when `newlines`.
  void skip_blank(bool newlines) {
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (c == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\r') {
        ++pos_;
      } else if (c == '\n' && newlines) {
        ++line_;
        ++pos_;
      } else {
        break;
      }
    }
  }

  void expect(char c) {
    if (pos_ >= s_.size() || s_[pos_] != c) error(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string bare_key() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' ||
                                s_[pos_] == '-')) {
      ++pos_;
    }
    if (pos_ == start) error("expected a key");
    return s_.substr(start, pos_ - start);
  }

  Value value() {
    if (pos_ >= s_.size()) error("missing value");
    const char c = s_[pos_];
    if (c == '"') {
      ++pos_;
      std::string out;
      while (pos_ < s_.size() && s_[pos_] != '"') {
        if (s_[pos_] == '\n') error("unterminated string");
        if (s_[pos_] == '\\') {
          ++pos_;
          if (pos_ >= s_.size()) break;
        }
        out += s_[pos_++];
      }
      expect('"');
      return Value{out};
    }
    if (c == '[') {
      ++pos_;
      Array items;
      skip_blank(true);
      while (pos_ < s_.size() && s_[pos_] != ']') {
        items.push_back(value());
        skip_blank(true);
        if (pos_ < s_.size() && s_[pos_] == ',') {
          ++pos_;
          skip_blank(true);
        } else {
          break;
        }
      }
      expect(']');
      return Value{std::move(items)};
    }
    const std::size_t start = pos_;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != ',' &&
           s_[pos_] != ']' && s_[pos_] != '#') {
      ++pos_;
    }
    const std::string token = s_.substr(start, pos_ - start);
    if (token == "true") return Value{true};
    if (token == "false") return Value{false};
    const char* first = token.data();
    const char* last = first + token.size();
    if (token.find_first_of(".eE") == std::string::npos) {
      std::int64_t i = 0;
      auto [p, ec] = std::from_chars(first, last, i);
      if (ec == std::errc() && p == last) return Value{i};
    } else {
      double d = 0.0;
      auto [p, ec] = std::from_chars(first, last, d);
      if (ec == std::errc() && p == last) return Value{d};
    }
    error("cannot parse value '" + token + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

// Typed, tracked access; every key read is marked so leftovers can be reported.
class Reader {
 public:
  explicit Reader(const Table& t) : table_(t) {}

  const Value* find(const std::string& section, const std::string& key) {
    auto s = table_.find(section);
    if (s == table_.end()) return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.end()) return nullptr;
    used_.insert(section + "." + key);
    return &k->second;
  }

  static double as_real(const Value& v, const std::string& field) {
    if (auto* i = std::get_if<std::int64_t>(&v.data)) return static_cast<double>(*i);
    if (auto* d = std::get_if<double>(&v.data)) return *d;
    fail(ErrorCode::kConfig, "config: " + field + ": expected a number");
  }

  void real(const std::string& section, const std::string& key, double& out) {
    if (auto* v = find(section, key)) out = as_real(*v, section + "." + key);
  }

  template <class Int>
  void integer(const std::string& section, const std::string& key, Int& out) {
    const Value* v = find(section, key);
    if (!v) return;
    auto* i = std::get_if<std::int64_t>(&v->data);
    const std::string field = section + "." + key;
    require(i != nullptr, ErrorCode::kConfig, "config: " + field + ": expected an integer");
    if constexpr (std::is_unsigned_v<Int>) {
      require(*i >= 0, ErrorCode::kConfig, "config: " + field + ": must be non-negative");
    }
    out = static_cast<Int>(*i);
  }

  void boolean(const std::string& section, const std::string& key, bool& out) {
    const Value* v = find(section, key);
    if (!v) return;
    auto* b = std::get_if<bool>(&v->data);
    require(b != nullptr, ErrorCode::kConfig, "config: " + section + "." + key + ": expected true or false");
    out = *b;
  }

  void string(const std::string& section, const std::string& key, std::string& out) {
    const Value* v = find(section, key);
    if (!v) return;
    auto* s = std::get_if<std::string>(&v->data);
    require(s != nullptr, ErrorCode::kConfig, "config: " + section + "." + key + ": expected a string");
    out = *s;
  }

  // Array of numbers, optionally of fixed length.
  bool reals(const std::string& section, const std::string& key, std::vector<double>& out,
             std::size_t length = 0) {
    const Value* v = find(section, key);
    if (!v) return false;
    out = to_reals(*v, section + "." + key, length);
    return true;
  }

  // Array of fixed-length number arrays.
  bool rows(const std::string& section, const std::string& key, std::vector<std::vector<double>>& out,
            std::size_t width) {
    const Value* v = find(section, key);
    if (!v) return false;
    const std::string field = section + "." + key;
    auto* a = std::get_if<Array>(&v->data);
    require(a != nullptr, ErrorCode::kConfig, "config: " + field + ": expected an array of arrays");
    out.clear();
    for (std::size_t r = 0; r < a->size(); ++r) {
      out.push_back(to_reals((*a)[r], field + "[" + std::to_string(r) + "]", width));
    }
    return true;
  }

  void reject_unused() const {
    for (const auto& [section, entries] : table_) {
      for (const auto& [key, value] : entries) {
        const std::string field = section.empty() ? key : section + "." + key;
        require(used_.count(section + "." + key) > 0, ErrorCode::kConfig, "config: unknown field " + field);
      }
    }
  }

 private:
  static std::vector<double> to_reals(const Value& v, const std::string& field, std::size_t length) {
    auto* a = std::get_if<Array>(&v.data);
    require(a != nullptr, ErrorCode::kConfig, "config: " + field + ": expected an array");
    if (length > 0) {
      require(a->size() == length, ErrorCode::kConfig,
              "config: " + field + ": expected " + std::to_string(length) + " entries");
    }
    std::vector<double> out;
    for (const auto& item : *a) out.push_back(as_real(item, field));
    return out;
  }

  const Table& table_;
  std::set<std::string> used_;
};

scene::Rgb to_rgb(const std::vector<double>& v) {
  return {static_cast<float>(v[0]), static_cast<float>(v[1]), static_cast<float>(v[2])};
}

// Shortest round-trip representation.
std::string num(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, p);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string reals(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + num(v[i]);
  return out + "]";
}

std::string num(float v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, p);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string rgb(const scene::Rgb& c) { return "[" + num(c[0]) + ", " + num(c[1]) + ", " + num(c[2]) + "]"; }

std::string quote(const std::string& v) {
  std::string out = "\"";
  for (char ch : v) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

void check(bool ok, const std::string& field, const std::string& what) {
  require(ok, ErrorCode::kConfig, "config: " + field + ": " + what);
}

bool unit_color(const scene::Rgb& c) {
  for (float v : c) {
    if (!(v >= 0.0f && v <= 1.0f)) return false;
  }
  return true;
}

}  // namespace

Table parse_toml(const std::string& text) { return TomlParser(text).parse(); }

const char* to_string(Precision p) { return p == Precision::kF64 ? "f64" : "f32"; }

model::Architecture PipelineConfig::architecture() const {
  model::Architecture arch;
  arch.image = scene.output_extent();
  arch.motor_dim = static_cast<int>(scene.ranges.size());
  return arch;
}

void PipelineConfig::validate() const {
  const auto& g = scene.geometry;
  check(!g.link_lengths.empty(), "scene.link_lengths", "at least one link required");
  check(g.link_widths.size() == g.link_lengths.size(), "scene.link_widths", "count must match scene.link_lengths");
  check(g.body_color.size() == g.link_lengths.size(), "scene.body_color", "count must match scene.link_lengths");
  check(scene.ranges.size() == g.link_lengths.size(), "scene.joint_ranges", "count must match scene.link_lengths");
  for (std::size_t k = 0; k < g.link_lengths.size(); ++k) {
    check(g.link_lengths[k] > 0.0, "scene.link_lengths", "entries must be positive");
    check(g.link_widths[k] > 0.0, "scene.link_widths", "entries must be positive");
    check(unit_color(g.body_color[k]), "scene.body_color", "components must lie in [0, 1]");
    check(scene.ranges[k].lo < scene.ranges[k].hi, "scene.joint_ranges", "each range needs lo < hi");
  }
  check(scene.render_extent.height > 0, "scene.render_height", "must be positive");
  check(scene.render_extent.width > 0, "scene.render_width", "must be positive");
  const int f = scene.downsample_factor;
  check(f > 0, "dataset.downsample", "must be positive");
  check(scene.render_extent.height % f == 0 && scene.render_extent.width % f == 0, "dataset.downsample",
        "must divide scene.render_height and scene.render_width");
  const auto arch = architecture();
  const int up = arch.upscale();
  check(arch.image.height % up == 0 && arch.image.width % up == 0, "scene.render_height",
        "stored image " + std::to_string(arch.image.height) + "x" + std::to_string(arch.image.width) +
            " must be divisible by " + std::to_string(up));
  const auto& bg = scene.background;
  check(bg.min_shapes >= 0, "scene.bg_min_shapes", "must be non-negative");
  check(bg.max_shapes >= bg.min_shapes, "scene.bg_max_shapes", "must be >= scene.bg_min_shapes");
  check(unit_color(bg.upper_color), "scene.bg_upper_color", "components must lie in [0, 1]");
  check(unit_color(bg.lower_color), "scene.bg_lower_color", "components must lie in [0, 1]");
  check(bg.split_min >= 0.0 && bg.split_min <= bg.split_max, "scene.bg_split_min", "must lie in [0, bg_split_max]");
  check(bg.split_max <= 1.0, "scene.bg_split_max", "must be <= 1");

  check(dataset.n_train > 0, "dataset.n_train", "must be positive");
  check(dataset.n_test > 0, "dataset.n_test", "must be positive");

  train.validate();

  check(segment.probe_size > 0, "segment.probe_size", "must be positive");
  check(segment.em.max_iters > 0, "segment.em_max_iters", "must be positive");
  check(segment.em.tol > 0.0, "segment.em_tol", "must be positive");
  check(segment.em.variance_floor > 0.0, "segment.variance_floor", "must be positive");
  check(segment.histogram_bins > 0, "segment.histogram_bins", "must be positive");
  check(segment.histogram_lo < segment.histogram_hi, "segment.histogram_hi", "must exceed segment.histogram_lo");
  check(segment.sample_masks >= 0, "segment.sample_masks", "must be non-negative");

  check(sweep.steps >= 2, "sweep.steps", "must be >= 2");
}

PipelineConfig from_table(const Table& table) {
  static const std::set<std::string> kSections{"scene", "dataset", "train", "segment", "sweep", "paths"};
  for (const auto& [name, entries] : table) {
    require(kSections.count(name) > 0, ErrorCode::kConfig,
            "config: unknown section [" + (name.empty() ? std::string("<top level>") : name) + "]");
  }

  PipelineConfig c;
  Reader r(table);
  auto& g = c.scene.geometry;
  r.reals("scene", "link_lengths", g.link_lengths);
  r.reals("scene", "link_widths", g.link_widths);
  std::vector<double> anchor;
  if (r.reals("scene", "base_anchor", anchor, 2)) g.base_anchor = {anchor[0], anchor[1]};
  r.real("scene", "base_orientation", g.base_orientation);
  std::vector<std::vector<double>> rows;
  if (r.rows("scene", "body_color", rows, 3)) {
    g.body_color.clear();
    for (const auto& row : rows) g.body_color.push_back(to_rgb(row));
  }
  if (r.rows("scene", "joint_ranges", rows, 2)) {
    c.scene.ranges.clear();
    for (const auto& row : rows) c.scene.ranges.push_back({row[0], row[1]});
  }
  r.integer("scene", "render_height", c.scene.render_extent.height);
  r.integer("scene", "render_width", c.scene.render_extent.width);
  std::string rule;
  r.string("scene", "mask_rule", rule);
  if (!rule.empty()) {
    check(rule == "all" || rule == "any", "scene.mask_rule", "expected \"all\" or \"any\"");
    c.scene.mask_rule = rule == "any" ? data::MaskDownsample::kAny : data::MaskDownsample::kAll;
  }
  auto& bg = c.scene.background;
  r.integer("scene", "bg_min_shapes", bg.min_shapes);
  r.integer("scene", "bg_max_shapes", bg.max_shapes);
  r.boolean("scene", "bg_random_colors", bg.random_colors);
  std::vector<double> color;
  if (r.reals("scene", "bg_upper_color", color, 3)) bg.upper_color = to_rgb(color);
  if (r.reals("scene", "bg_lower_color", color, 3)) bg.lower_color = to_rgb(color);
  r.real("scene", "bg_split_min", bg.split_min);
  r.real("scene", "bg_split_max", bg.split_max);

  r.integer("dataset", "n_train", c.dataset.n_train);
  r.integer("dataset", "n_test", c.dataset.n_test);
  r.integer("dataset", "seed", c.dataset.seed);
  r.integer("dataset", "downsample", c.scene.downsample_factor);

  auto& t = c.train;
  r.integer("train", "iterations", t.iterations);
  r.integer("train", "batch_size", t.batch_size);
  r.real("train", "lr_start", t.lr_start);
  r.real("train", "lr_end", t.lr_end);
  r.integer("train", "alpha_ramp_end", t.alpha_ramp_end);
  r.real("train", "beta1", t.beta1);
  r.real("train", "beta2", t.beta2);
  r.real("train", "epsilon", t.epsilon);
  r.integer("train", "seed", t.seed);
  r.boolean("train", "detach_error_target", t.detach_error_target);
  std::string precision;
  r.string("train", "precision", precision);
  if (!precision.empty()) {
    check(precision == "f32" || precision == "f64", "train.precision", "expected \"f32\" or \"f64\"");
    c.precision = precision == "f64" ? Precision::kF64 : Precision::kF32;
  }

  auto& s = c.segment;
  r.integer("segment", "probe_size", s.probe_size);
  r.integer("segment", "seed", s.seed);
  r.integer("segment", "em_max_iters", s.em.max_iters);
  r.real("segment", "em_tol", s.em.tol);
  r.real("segment", "variance_floor", s.em.variance_floor);
  r.integer("segment", "histogram_bins", s.histogram_bins);
  r.real("segment", "histogram_lo", s.histogram_lo);
  r.real("segment", "histogram_hi", s.histogram_hi);
  r.integer("segment", "sample_masks", s.sample_masks);

  r.integer("sweep", "steps", c.sweep.steps);

  r.string("paths", "workspace", c.workspace);

  r.reject_unused();
  c.validate();
  return c;
}

PipelineConfig parse_config(const std::string& text) { return from_table(parse_toml(text)); }

PipelineConfig load_config(const std::filesystem::path& path) {
  return parse_config(data::read_binary(path));
}

std::string canonical_section(const PipelineConfig& c, const std::string& section) {
  std::string o = "[" + section + "]\n";
  auto line = [&o](const std::string& key, const std::string& value) { o += key + " = " + value + "\n"; };
  auto integer = [](auto v) { return std::to_string(v); };
  auto boolean = [](bool v) { return std::string(v ? "true" : "false"); };

  if (section == "scene") {
    const auto& g = c.scene.geometry;
    line("link_lengths", reals(g.link_lengths));
    line("link_widths", reals(g.link_widths));
    line("base_anchor", reals({g.base_anchor.x, g.base_anchor.y}));
    line("base_orientation", num(g.base_orientation));
    std::string colors = "[";
    for (std::size_t k = 0; k < g.body_color.size(); ++k) colors += (k ? ", " : "") + rgb(g.body_color[k]);
    line("body_color", colors + "]");
    std::string ranges = "[";
    for (std::size_t k = 0; k < c.scene.ranges.size(); ++k) {
      ranges += (k ? ", " : "") + reals({c.scene.ranges[k].lo, c.scene.ranges[k].hi});
    }
    line("joint_ranges", ranges + "]");
    line("render_height", integer(c.scene.render_extent.height));
    line("render_width", integer(c.scene.render_extent.width));
    line("mask_rule", quote(c.scene.mask_rule == data::MaskDownsample::kAny ? "any" : "all"));
    const auto& bg = c.scene.background;
    line("bg_min_shapes", integer(bg.min_shapes));
    line("bg_max_shapes", integer(bg.max_shapes));
    line("bg_random_colors", boolean(bg.random_colors));
    line("bg_upper_color", rgb(bg.upper_color));
    line("bg_lower_color", rgb(bg.lower_color));
    line("bg_split_min", num(bg.split_min));
    line("bg_split_max", num(bg.split_max));
  } else if (section == "dataset") {
    line("n_train", integer(c.dataset.n_train));
    line("n_test", integer(c.dataset.n_test));
    line("seed", integer(c.dataset.seed));
    line("downsample", integer(c.scene.downsample_factor));
  } else if (section == "train") {
    const auto& t = c.train;
    line("iterations", integer(t.iterations));
    line("batch_size", integer(t.batch_size));
    line("lr_start", num(t.lr_start));
    line("lr_end", num(t.lr_end));
    line("alpha_ramp_end", integer(t.alpha_ramp_end));
    line("beta1", num(t.beta1));
    line("beta2", num(t.beta2));
    line("epsilon", num(t.epsilon));
    line("seed", integer(t.seed));
    line("detach_error_target", boolean(t.detach_error_target));
    line("precision", quote(to_string(c.precision)));
  } else if (section == "segment") {
    const auto& s = c.segment;
    line("probe_size", integer(s.probe_size));
    line("seed", integer(s.seed));
    line("em_max_iters", integer(s.em.max_iters));
    line("em_tol", num(s.em.tol));
    line("variance_floor", num(s.em.variance_floor));
    line("histogram_bins", integer(s.histogram_bins));
    line("histogram_lo", num(s.histogram_lo));
    line("histogram_hi", num(s.histogram_hi));
    line("sample_masks", integer(s.sample_masks));
  } else if (section == "sweep") {
    line("steps", integer(c.sweep.steps));
  } else {
    fail(ErrorCode::kInvalidArgument, "canonical_section: unknown section " + section);
  }
  return o;
}

std::string to_toml(const PipelineConfig& c) {
  std::string out;
  for (const char* s : {"scene", "dataset", "train", "segment", "sweep"}) out += canonical_section(c, s) + "\n";
  if (!c.workspace.empty()) out += "[paths]\nworkspace = " + quote(c.workspace) + "\n";
  return out;
}

std::string data_hash(const PipelineConfig& c) {
  return hex64(fnv1a(canonical_section(c, "scene") + canonical_section(c, "dataset")));
}

std::string train_hash(const PipelineConfig& c) {
  return hex64(fnv1a(data_hash(c) + "\n" + canonical_section(c, "train")));
}

std::string segment_hash(const PipelineConfig& c) {
  return hex64(fnv1a(train_hash(c) + "\n" + canonical_section(c, "segment")));
}

std::string sweep_hash(const PipelineConfig& c) {
  return hex64(fnv1a(segment_hash(c) + "\n" + canonical_section(c, "sweep")));
}

}  // namespace bodyimage::config
