#include "shotperc/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "shotperc/errors.hpp"

namespace shotperc {

namespace {

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Parser {
 public:
  Parser(const std::string& text, std::size_t pos) : s_(text), pos_(pos) {}

  std::size_t pos() const { return pos_; }

  void skip_space(bool newlines) {
    for (;;) {
      while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r' ||
                                  (newlines && s_[pos_] == '\n'))) {
        ++pos_;
      }
      if (newlines && pos_ < s_.size() && s_[pos_] == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
        continue;
      }
      return;
    }
  }

  void skip_comment() {
    if (peek() != '#') return;
    while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
  }

  bool at_end() const { return pos_ >= s_.size(); }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

  std::string key() {
    std::string k;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' ||
                                s_[pos_] == '-' || s_[pos_] == '.')) {
      k += s_[pos_++];
    }
    if (k.empty()) throw std::runtime_error("expected a key");
    return k;
  }

  void expect(char c) {
    if (peek() != c) throw std::runtime_error(std::string("expected '") + c + "'");
    ++pos_;
  }

  // Parses a value; inline tables are flattened into `out` under `prefix`.
  void value(const std::string& prefix, ConfigMap& out) {
    skip_space(false);
    if (peek() == '{') {
      ++pos_;
      skip_space(false);
      if (peek() == '}') {
        ++pos_;
        return;
      }
      for (;;) {
        skip_space(false);
        const std::string k = key();
        skip_space(false);
        expect('=');
        value(prefix + "." + k, out);
        skip_space(false);
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        expect('}');
        return;
      }
    }
    out[prefix] = scalar_or_array();
  }

  ConfigValue scalar_or_array() {
    skip_space(false);
    ConfigValue v;
    const char c = peek();
    if (c == '[') {
      ++pos_;
      v.type = ConfigValue::Type::array;
      skip_space(true);
      if (peek() == ']') {
        ++pos_;
        return v;
      }
      for (;;) {
        skip_space(true);
        v.items.push_back(scalar_or_array());
        skip_space(true);
        if (peek() == ',') {
          ++pos_;
          skip_space(true);
          if (peek() == ']') {
            ++pos_;
            return v;
          }
          continue;
        }
        expect(']');
        return v;
      }
    }
    if (c == '"') {
      ++pos_;
      v.type = ConfigValue::Type::string;
      while (pos_ < s_.size() && s_[pos_] != '"') {
        char ch = s_[pos_++];
        if (ch == '\n') throw std::runtime_error("unterminated string");
        if (ch == '\\' && pos_ < s_.size()) {
          const char e = s_[pos_++];
          ch = e == 'n' ? '\n' : e == 't' ? '\t' : e;
        }
        v.text += ch;
      }
      expect('"');
      return v;
    }
    std::string word;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != ',' &&
           s_[pos_] != ']' && s_[pos_] != '}' && s_[pos_] != '#') {
      word += s_[pos_++];
    }
    if (word == "true" || word == "false") {
      v.type = ConfigValue::Type::boolean;
      v.boolean = word == "true";
      v.text = word;
      return v;
    }
    if (word == "inf" || word == "+inf" || word == "-inf" || word == "nan") {
      throw std::runtime_error("non-finite number '" + word + "'");
    }
    char* end = nullptr;
    const double d = std::strtod(word.c_str(), &end);
    if (word.empty() || end != word.c_str() + word.size()) {
      throw std::runtime_error("cannot parse value '" + word + "'");
    }
    v.type = ConfigValue::Type::number;
    v.number = d;
    v.text = word;
    return v;
  }

 private:
  const std::string& s_;
  std::size_t pos_;
};

ConfigMap parse_lines(const std::string& text, const std::string& source, bool bare_fallback) {
  ConfigMap out;
  std::vector<std::string> problems;
  std::string section;
  std::size_t pos = 0;
  int line_no = 1;
  while (pos < text.size()) {
    const int start_line = line_no;
    Parser p(text, pos);
    try {
      p.skip_space(false);
      if (p.peek() == '\n' || p.peek() == '#' || p.at_end()) {
        // blank or comment
      } else if (p.peek() == '[') {
        p.expect('[');
        p.skip_space(false);
        section = p.key();
        p.skip_space(false);
        p.expect(']');
      } else {
        const std::string k = p.key();
        p.skip_space(false);
        p.expect('=');
        const std::string full = section.empty() ? k : section + "." + k;
        p.value(full, out);
      }
      p.skip_space(false);
      p.skip_comment();
      if (!p.at_end() && p.peek() != '\n') throw std::runtime_error("trailing characters");
      for (std::size_t i = pos; i < p.pos(); ++i) line_no += text[i] == '\n';
      pos = p.pos();
      if (pos < text.size()) {
        ++pos;
        ++line_no;
      }
    } catch (const std::exception& e) {
      if (bare_fallback) throw;
      problems.push_back(source + ":" + std::to_string(start_line) + ": " + e.what());
      const auto nl = text.find('\n', pos);
      pos = nl == std::string::npos ? text.size() : nl + 1;
      line_no = start_line + 1;
    }
  }
  if (!problems.empty()) throw ConfigError(problems);
  return out;
}

struct Reader {
  const ConfigMap& map;
  std::vector<std::string>& problems;
  std::set<std::string> used;

  const ConfigValue* get(const std::string& key) {
    used.insert(key);
    const auto it = map.find(key);
    return it == map.end() ? nullptr : &it->second;
  }

  std::optional<double> number(const std::string& key) {
    const ConfigValue* v = get(key);
    if (!v) return std::nullopt;
    if (v->type != ConfigValue::Type::number) {
      problems.push_back(key + ": expected a number, got " + v->to_string());
      return std::nullopt;
    }
    return v->number;
  }

  std::optional<std::string> string(const std::string& key) {
    const ConfigValue* v = get(key);
    if (!v) return std::nullopt;
    if (v->type != ConfigValue::Type::string) {
      problems.push_back(key + ": expected a string, got " + v->to_string());
      return std::nullopt;
    }
    return v->text;
  }

  std::optional<std::uint64_t> unsigned_integer(const std::string& key) {
    const ConfigValue* v = get(key);
    if (!v) return std::nullopt;
    std::uint64_t out = 0;
    const std::string& t = v->text;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
    if (v->type != ConfigValue::Type::number || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
      problems.push_back(key + ": expected a nonnegative 64-bit integer, got " + v->to_string());
      return std::nullopt;
    }
    return out;
  }

  // A number, or "auto" (returns nullopt and sets is_auto).
  std::optional<double> number_or_auto(const std::string& key, bool& present) {
    const ConfigValue* v = get(key);
    present = v != nullptr;
    if (!v) return std::nullopt;
    if (v->type == ConfigValue::Type::string && v->text == "auto") {
      present = false;
      return std::nullopt;
    }
    if (v->type != ConfigValue::Type::number) {
      problems.push_back(key + ": expected a number or \"auto\", got " + v->to_string());
      present = false;
      return std::nullopt;
    }
    return v->number;
  }

  std::optional<std::vector<double>> list(const std::string& key) {
    const ConfigValue* v = get(key);
    if (!v) return std::nullopt;
    if (v->type == ConfigValue::Type::number) return std::vector<double>{v->number};
    if (v->type != ConfigValue::Type::array) {
      problems.push_back(key + ": expected a list of numbers, got " + v->to_string());
      return std::nullopt;
    }
    std::vector<double> out;
    for (const ConfigValue& item : v->items) {
      if (item.type != ConfigValue::Type::number) {
        problems.push_back(key + ": list entries must be numbers, got " + item.to_string());
        return std::nullopt;
      }
      out.push_back(item.number);
    }
    if (out.empty()) problems.push_back(key + ": list must not be empty");
    return out;
  }
};

void require_positive(const std::vector<double>& v, const std::string& key,
                      std::vector<std::string>& problems) {
  for (double x : v) {
    if (!(x > 0.0)) {
      problems.push_back(key + ": entries must be > 0 (got " + format_number(x) + ")");
      return;
    }
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error("invalid configuration:\n  " + join(problems, "\n  ")),
      problems_(std::move(problems)) {}

std::string ConfigValue::to_string() const {
  switch (type) {
    case Type::string:
      return "\"" + text + "\"";
    case Type::number:
      return text;
    case Type::boolean:
      return boolean ? "true" : "false";
    case Type::array: {
      std::vector<std::string> parts;
      for (const auto& i : items) parts.push_back(i.to_string());
      return "[" + join(parts, ", ") + "]";
    }
  }
  return {};
}

ConfigMap parse_config_text(const std::string& text, const std::string& source) {
  return parse_lines(text, source, false);
}

ConfigMap load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file " + path.string()});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

void apply_override(ConfigMap& map, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError({"--set expects key=value, got '" + assignment + "'"});
  }
  std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
  ConfigMap parsed;
  try {
    parsed = parse_lines(key + " = " + value, "--set", true);
  } catch (const std::exception&) {
    ConfigValue v;
    v.type = ConfigValue::Type::string;
    v.text = value;
    parsed[key] = v;
  }
  // An inline table override replaces the whole table.
  if (parsed.count(key) == 0) {
    for (auto it = map.begin(); it != map.end();) {
      it = it->first.rfind(key + ".", 0) == 0 ? map.erase(it) : std::next(it);
    }
  }
  for (auto& [k, v] : parsed) map[k] = v;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{
      "marginal_clt", "coupling_rate", "truncation_rate", "c1_tails", "lc_sweep",
      "threshold_curve", "sprinkle", "kesten", "duality_audit"};
  return names;
}

std::string to_string(ExperimentKind k) { return experiment_names()[static_cast<std::size_t>(k)]; }

std::optional<ExperimentKind> parse_experiment(const std::string& name) {
  const auto& names = experiment_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<ExperimentKind>(i);
  }
  return std::nullopt;
}

AnyKernel KernelSpec::build() const {
  if (family == "rational") return Kernel::rational(dimension, beta);
  if (family == "stretched_exp") return Kernel::stretched_exp(dimension, gamma);
  throw InvalidArgument("unknown kernel family '" + family + "'");
}

std::string KernelSpec::to_string() const {
  if (family == "rational") return "{family = \"rational\", dimension = " + std::to_string(dimension) +
                                   ", beta = " + format_number(beta) + "}";
  return "{family = \"" + family + "\", dimension = " + std::to_string(dimension) +
         ", gamma = " + format_number(gamma) + "}";
}

ExperimentConfig build_config(const ConfigMap& map) {
  std::vector<std::string> problems;
  Reader r{map, problems, {}};
  ExperimentConfig cfg;

  if (auto name = r.string("experiment")) {
    if (auto kind = parse_experiment(*name)) {
      cfg.experiment = *kind;
    } else {
      problems.push_back("experiment: unknown experiment '" + *name + "' (expected one of " +
                         join(experiment_names(), ", ") + ")");
    }
  } else if (!map.count("experiment")) {
    problems.push_back("experiment: missing");
  }

  if (auto f = r.string("kernel.family")) cfg.kernel.family = *f;
  if (auto b = r.number("kernel.beta")) cfg.kernel.beta = *b;
  if (auto g = r.number("kernel.gamma")) cfg.kernel.gamma = *g;
  if (auto d = r.unsigned_integer("kernel.dimension")) cfg.kernel.dimension = static_cast<int>(*d);
  if (cfg.kernel.family != "rational" && cfg.kernel.family != "stretched_exp") {
    problems.push_back("kernel.family: expected \"rational\" or \"stretched_exp\", got \"" +
                       cfg.kernel.family + "\"");
  } else {
    try {
      cfg.kernel.build();
    } catch (const std::exception& e) {
      problems.push_back(std::string("kernel: ") + e.what());
    }
  }
  if (cfg.kernel.dimension != 2 && cfg.experiment != ExperimentKind::marginal_clt) {
    problems.push_back("kernel.dimension: experiments other than marginal_clt run in d = 2");
  }

  if (auto v = r.list("lambda")) {
    require_positive(*v, "lambda", problems);
    cfg.lambdas = *v;
  }
  if (auto v = r.list("R")) {
    require_positive(*v, "R", problems);
    cfg.boxes = *v;
  }
  if (auto v = r.list("r")) {
    require_positive(*v, "r", problems);
    cfg.ranges = *v;
  }
  if (auto v = r.list("level")) cfg.levels = *v;
  if (auto v = r.list("u")) {
    require_positive(*v, "u", problems);
    cfg.thresholds = *v;
  }

  bool present = false;
  if (auto e = r.number_or_auto("epsilon", present)) {
    if (!(*e > 0.0)) problems.push_back("epsilon: must be > 0");
    cfg.epsilon = *e;
  }
  if (auto p = r.number_or_auto("pad", present)) {
    if (!(*p > 0.0)) problems.push_back("pad: must be > 0");
    cfg.pad = *p;
  }
  if (auto h = r.number_or_auto("sprinkle", present)) {
    if (!(*h >= 0.0)) problems.push_back("sprinkle: must be >= 0");
    cfg.sprinkle = *h;
  }
  if (auto m = r.number_or_auto("m", present)) {
    if (*m < 0.0 || *m > 24.0 || std::floor(*m) != *m) {
      problems.push_back("m: must be an integer in [0, 24] or \"auto\"");
    } else {
      cfg.depth = static_cast<int>(*m);
    }
  }
  if (auto f = r.string("field")) {
    if (*f != "gaussian" && *f != "shot_noise") {
      problems.push_back("field: expected \"gaussian\" or \"shot_noise\", got \"" + *f + "\"");
    }
    cfg.field = *f;
  }
  if (auto v = r.number("radius")) {
    if (!(*v > 0.0)) problems.push_back("radius: must be > 0");
    cfg.radius = *v;
  }
  if (auto v = r.number("tol")) {
    if (!(*v > 0.0)) problems.push_back("tol: must be > 0");
    cfg.tol = *v;
  }
  if (auto v = r.unsigned_integer("masks")) cfg.masks = *v;
  if (auto v = r.unsigned_integer("replicas")) {
    if (*v < 30) problems.push_back("replicas: must be >= 30 (got " + std::to_string(*v) + ")");
    cfg.replicas = *v;
  }
  if (auto v = r.unsigned_integer("seed")) cfg.seed = *v;
  if (auto v = r.string("output")) {
    if (v->empty()) problems.push_back("output: must not be empty");
    cfg.output = *v;
  }
  if (auto v = r.unsigned_integer("threads")) {
    if (*v < 1 || *v > 1024) problems.push_back("threads: must be in [1, 1024]");
    cfg.threads = static_cast<int>(*v);
  }

  for (const auto& [key, value] : map) {
    if (!r.used.count(key)) problems.push_back(key + ": unknown key");
  }
  if (!problems.empty()) throw ConfigError(problems);
  return cfg;
}

std::vector<std::string> config_echo(const ExperimentConfig& cfg) {
  auto list = [](const std::vector<double>& v) {
    std::vector<std::string> parts;
    for (double x : v) parts.push_back(format_number(x));
    return "[" + join(parts, ", ") + "]";
  };
  auto opt = [](const std::optional<double>& v) {
    return v ? format_number(*v) : std::string("\"auto\"");
  };
  return {
      "experiment = \"" + to_string(cfg.experiment) + "\"",
      "kernel = " + cfg.kernel.to_string(),
      "lambda = " + list(cfg.lambdas),
      "R = " + list(cfg.boxes),
      "r = " + list(cfg.ranges),
      "level = " + list(cfg.levels),
      "u = " + list(cfg.thresholds),
      "epsilon = " + opt(cfg.epsilon),
      "m = " + (cfg.depth ? std::to_string(*cfg.depth) : std::string("\"auto\"")),
      "pad = " + opt(cfg.pad),
      "sprinkle = " + opt(cfg.sprinkle),
      "field = \"" + cfg.field + "\"",
      "radius = " + opt(cfg.radius),
      "tol = " + format_number(cfg.tol),
      "masks = " + std::to_string(cfg.masks),
      "replicas = " + std::to_string(cfg.replicas),
      "seed = " + std::to_string(cfg.seed),
  };
}

}  // namespace shotperc
