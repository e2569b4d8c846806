#include "spdope/config.hpp"

#include <openssl/evp.h>

#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "spdope/errors.hpp"

namespace spdope {

using nlohmann::json;
using nlohmann::ordered_json;

// -- TOML subset ----------------------------------------------------------------

namespace {

class TomlParser {
 public:
  explicit TomlParser(const std::string& text) : s_(text) {}

  json document() {
    json root = json::object();
    json* table = &root;
    std::set<std::string> headers;
    for (;;) {
      skip_space_and_comments(true);
      if (eof()) break;
      if (peek() == '[') {
        ++pos_;
        if (peek() == '[') fail("arrays of tables are not supported");
        skip_inline_space();
        const auto path = key_path();
        skip_inline_space();
        expect(']');
        std::string joined;
        for (const auto& k : path) joined += (joined.empty() ? "" : ".") + k;
        if (!headers.insert(joined).second) fail("table [" + joined + "] defined twice");
        table = &root;
        for (const auto& k : path) {
          json& next = (*table)[k];
          if (next.is_null()) next = json::object();
          if (!next.is_object()) fail("\"" + k + "\" is not a table");
          table = &next;
        }
        end_of_line();
        continue;
      }
      assignment(*table);
      end_of_line();
    }
    return root;
  }

  json single_value() {
    skip_inline_space();
    json v = value();
    skip_inline_space();
    if (!eof()) fail("trailing characters after value");
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("", "config line " + std::to_string(line_) + ": " + what);
  }

 private:
  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_inline_space() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos_;
  }

  void skip_space_and_comments(bool newlines) {
    for (;;) {
      skip_inline_space();
      if (peek() == '#') {
        while (!eof() && peek() != '\n') ++pos_;
      } else if (newlines && peek() == '\n') {
        ++pos_;
        ++line_;
      } else {
        return;
      }
    }
  }

  void end_of_line() {
    skip_space_and_comments(false);
    if (eof()) return;
    if (peek() != '\n') fail("expected end of line");
    ++pos_;
    ++line_;
  }

  std::string bare_or_quoted_key() {
    if (peek() == '"' || peek() == '\'') return string_value();
    const std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++pos_;
    if (pos_ == start) fail("expected a key");
    return s_.substr(start, pos_ - start);
  }

  std::vector<std::string> key_path() {
    std::vector<std::string> path{bare_or_quoted_key()};
    for (;;) {
      skip_inline_space();
      if (peek() != '.') return path;
      ++pos_;
      skip_inline_space();
      path.push_back(bare_or_quoted_key());
    }
  }

  void assignment(json& table) {
    const auto path = key_path();
    skip_inline_space();
    expect('=');
    skip_inline_space();
    json v = value();
    json* t = &table;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      json& next = (*t)[path[i]];
      if (next.is_null()) next = json::object();
      if (!next.is_object()) fail("\"" + path[i] + "\" is not a table");
      t = &next;
    }
    if (t->contains(path.back())) fail("duplicate key \"" + path.back() + "\"");
    (*t)[path.back()] = std::move(v);
  }

  std::string string_value() {
    const char quote = peek();
    ++pos_;
    std::string out;
    while (!eof() && peek() != quote) {
      char c = s_[pos_++];
      if (c == '\n') fail("unterminated string");
      if (c == '\\' && quote == '"') {
        if (eof()) fail("unterminated string");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      }
      out += c;
    }
    if (eof()) fail("unterminated string");
    ++pos_;
    return out;
  }

  json number_value() {
    const std::size_t start = pos_;
    if (peek() == '+' || peek() == '-') ++pos_;
    bool is_float = false;
    while (!eof()) {
      const char c = peek();
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '_') {
        ++pos_;
      } else if (c == '.' || c == 'e' || c == 'E') {
        is_float = true;
        ++pos_;
        if ((c == 'e' || c == 'E') && (peek() == '+' || peek() == '-')) ++pos_;
      } else {
        break;
      }
    }
    std::string tok;
    for (std::size_t i = start; i < pos_; ++i) {
      if (s_[i] != '_') tok += s_[i];
    }
    if (tok.empty() || tok == "+" || tok == "-") fail("expected a value");
    try {
      std::size_t used = 0;
      if (!is_float) {
        const long long v = std::stoll(tok, &used);
        if (used == tok.size()) return json(v);
      } else {
        const double v = std::stod(tok, &used);
        if (used == tok.size()) return json(v);
      }
    } catch (const std::exception&) {
    }
    fail("malformed number \"" + tok + "\"");
  }

  json value() {
    const char c = peek();
    if (c == '"' || c == '\'') return string_value();
    if (c == '[') {
      ++pos_;
      json arr = json::array();
      for (;;) {
        skip_space_and_comments(true);
        if (peek() == ']') {
          ++pos_;
          return arr;
        }
        arr.push_back(value());
        skip_space_and_comments(true);
        if (peek() == ',') {
          ++pos_;
        } else if (peek() != ']') {
          fail("expected ',' or ']' in array");
        }
      }
    }
    if (c == '{') {
      ++pos_;
      json obj = json::object();
      skip_inline_space();
      if (peek() == '}') {
        ++pos_;
        return obj;
      }
      for (;;) {
        skip_inline_space();
        assignment(obj);
        skip_inline_space();
        if (peek() == ',') {
          ++pos_;
        } else if (peek() == '}') {
          ++pos_;
          return obj;
        } else {
          fail("expected ',' or '}' in inline table");
        }
      }
    }
    if (s_.compare(pos_, 4, "true") == 0) {
      pos_ += 4;
      return true;
    }
    if (s_.compare(pos_, 5, "false") == 0) {
      pos_ += 5;
      return false;
    }
    return number_value();
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

}  // namespace

json parse_toml(const std::string& text) { return TomlParser(text).document(); }

json parse_toml_value(const std::string& text) {
  try {
    return TomlParser(text).single_value();
  } catch (const ConfigError&) {
    // bare words such as gaussian or bb read as strings
    for (char c : text) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' || c == '/')) throw;
    }
    if (text.empty()) throw;
    return text;
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set", "expected key=value, got \"" + assignment + "\"");
  const std::string key = assignment.substr(0, eq);
  json* t = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("--set", "empty key component in \"" + key + "\"");
    if (dot == std::string::npos) {
      (*t)[part] = parse_toml_value(assignment.substr(eq + 1));
      return;
    }
    json& next = (*t)[part];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) throw ConfigError(key, "\"" + part + "\" is not a table");
    t = &next;
    start = dot + 1;
  }
}

// -- typed access -----------------------------------------------------------------

namespace {

class Block {
 public:
  Block(const json& doc, std::string name, std::set<std::string> allowed) : name_(std::move(name)) {
    if (doc.is_null()) return;
    if (!doc.is_object()) throw ConfigError(name_, "must be a table");
    for (const auto& [k, v] : doc.items()) {
      if (!allowed.count(k)) throw ConfigError(full(k), "unknown key");
    }
    doc_ = &doc;
  }

  bool has(const std::string& k) const { return doc_ != nullptr && doc_->contains(k); }
  std::string full(const std::string& k) const { return name_.empty() ? k : name_ + "." + k; }

  double number(const std::string& k, double fallback) const {
    if (!has(k)) return fallback;
    const json& v = doc_->at(k);
    if (!v.is_number()) throw ConfigError(full(k), "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(full(k), "must be finite");
    return d;
  }

  std::uint64_t integer(const std::string& k, std::uint64_t fallback) const {
    if (!has(k)) return fallback;
    const json& v = doc_->at(k);
    if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(full(k), "must be a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& k, bool fallback) const {
    if (!has(k)) return fallback;
    const json& v = doc_->at(k);
    if (!v.is_boolean()) throw ConfigError(full(k), "must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& k, const std::string& fallback) const {
    if (!has(k)) return fallback;
    const json& v = doc_->at(k);
    if (!v.is_string()) throw ConfigError(full(k), "must be a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& k, const std::vector<double>& fallback) const {
    if (!has(k)) return fallback;
    const json& v = doc_->at(k);
    if (!v.is_array()) throw ConfigError(full(k), "must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError(full(k), "must be an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  const json* raw(const std::string& k) const { return has(k) ? &doc_->at(k) : nullptr; }

 private:
  std::string name_;
  const json* doc_ = nullptr;
};

const json& sub(const json& doc, const char* k) {
  static const json null_value;
  return doc.contains(k) ? doc.at(k) : null_value;
}

Vec3 vec3(const std::vector<double>& v, const std::string& key) {
  if (v.size() != 3) throw ConfigError(key, "must have three components");
  return {v[0], v[1], v[2]};
}

template <class Fn>
auto rethrow_as_config(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key, e.what());
  }
}

ordered_json vec_json(const Vec3& v) { return ordered_json::array({v[0], v[1], v[2]}); }

}  // namespace

DopingProfile profile_from_json(const json& block) {
  const Block b(block, "profile", {"type", "epsilon", "alpha", "balls"});
  const std::string type = b.string("type", "zero");
  if (type == "zero") return DopingProfile::zero();
  if (type == "gaussian" || type == "power_law") {
    if (!b.has("epsilon") || !b.has("alpha")) throw ConfigError("profile", type + " needs epsilon and alpha");
    const double eps = b.number("epsilon", 0.0);
    const double alpha = b.number("alpha", 0.0);
    return rethrow_as_config("profile", [&] {
      return type == "gaussian" ? DopingProfile::gaussian(eps, alpha) : DopingProfile::power_law(eps, alpha);
    });
  }
  if (type == "balls") {
    const json* arr = b.raw("balls");
    if (arr == nullptr || !arr->is_array() || arr->empty()) {
      throw ConfigError("profile.balls", "must be a nonempty array of {center, radius, amplitude}");
    }
    std::vector<BallSpec> balls;
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const std::string key = "profile.balls[" + std::to_string(i) + "]";
      const Block ball((*arr)[i], key, {"center", "radius", "amplitude"});
      BallSpec spec;
      spec.center = vec3(ball.numbers("center", {0.0, 0.0, 0.0}), key + ".center");
      spec.radius = ball.number("radius", 1.0);
      spec.amplitude = ball.number("amplitude", 1.0);
      balls.push_back(spec);
    }
    return rethrow_as_config("profile.balls", [&] { return DopingProfile::balls(balls); });
  }
  throw ConfigError("profile.type", "expected zero, gaussian, power_law or balls, got \"" + type + "\"");
}

ordered_json profile_to_json(const DopingProfile& profile) {
  ordered_json j;
  j["type"] = profile.type_name();
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GaussianProfile> || std::is_same_v<T, PowerLawProfile>) {
          j["epsilon"] = p.epsilon;
          j["alpha"] = p.alpha;
        } else if constexpr (std::is_same_v<T, BallsProfile>) {
          j["balls"] = ordered_json::array();
          for (const auto& b : p.balls) {
            ordered_json bj;
            bj["center"] = vec_json(b.center);
            bj["radius"] = b.radius;
            bj["amplitude"] = b.amplitude;
            j["balls"].push_back(bj);
          }
        }
      },
      profile.variant());
  return j;
}

RunConfig RunConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("", "config root must be a table");
  const Block top(doc, "", {"grid", "params", "profile", "minimize", "propagate", "scan", "mu_star", "subadd", "floor",
                            "stability", "evolve", "check", "output", "seed"});
  RunConfig c;
  c.output = top.string("output", c.output);
  c.seed = top.integer("seed", c.seed);

  const Block grid(sub(doc, "grid"), "grid", {"N", "L"});
  c.grid.N = grid.integer("N", c.grid.N);
  c.grid.L = grid.number("L", c.grid.L);
  rethrow_as_config("grid", [&] { return Grid3(c.grid.L, c.grid.N); });

  const Block params(sub(doc, "params"), "params", {"p", "e"});
  c.params = PhysParams::make(params.number("p", c.params.p), params.number("e", c.params.e));

  c.profile = profile_from_json(sub(doc, "profile"));

  const Block mz(sub(doc, "minimize"), "minimize",
                 {"mu", "tau0", "max_iters", "grad_tol", "energy_tol", "step", "init", "init_width", "init_path",
                  "restarts", "perturbation"});
  c.mu = mz.number("mu", c.mu);
  if (!(c.mu > 0.0)) throw ConfigError("minimize.mu", "must be positive");
  MinimizeConfig& m = c.minimize;
  m.tau0 = mz.number("tau0", m.tau0);
  m.max_iters = mz.integer("max_iters", m.max_iters);
  m.grad_tol = mz.number("grad_tol", m.grad_tol);
  m.energy_tol = mz.number("energy_tol", m.energy_tol);
  m.step = parse_step_control(mz.string("step", to_string(m.step)));
  m.init = parse_init_kind(mz.string("init", to_string(m.init)));
  m.init_width = mz.number("init_width", m.init_width);
  m.init_path = mz.string("init_path", m.init_path);
  m.restarts = mz.integer("restarts", m.restarts);
  m.perturbation = mz.number("perturbation", m.perturbation);
  m.seed = c.seed;
  m.validate();

  const Block pr(sub(doc, "propagate"), "propagate", {"dt", "T", "monitor_stride", "power", "hartree", "snapshot_every"});
  PropagatorConfig& p = c.propagate;
  p.dt = pr.number("dt", p.dt);
  p.T = pr.number("T", p.T);
  p.monitor_stride = pr.integer("monitor_stride", p.monitor_stride);
  p.power = pr.boolean("power", p.power);
  p.hartree = pr.boolean("hartree", p.hartree);
  p.snapshot_every = pr.integer("snapshot_every", p.snapshot_every);
  p.validate();

  const Block sc(sub(doc, "scan"), "scan", {"mu", "warm_start"});
  c.scan.mu = sc.numbers("mu", c.scan.mu);
  c.scan.warm_start = sc.boolean("warm_start", c.scan.warm_start);
  for (double v : c.scan.mu) {
    if (!(v > 0.0)) throw ConfigError("scan.mu", "values must be positive");
  }

  const Block ms(sub(doc, "mu_star"), "mu_star", {"bracket", "tol"});
  const auto bracket = ms.numbers("bracket", {c.mu_star.lo, c.mu_star.hi});
  if (bracket.size() != 2) throw ConfigError("mu_star.bracket", "must be [lo, hi]");
  c.mu_star.lo = bracket[0];
  c.mu_star.hi = bracket[1];
  c.mu_star.tol = ms.number("tol", c.mu_star.tol);
  if (!(c.mu_star.tol > 0.0)) throw ConfigError("mu_star.tol", "must be positive");

  const Block sa(sub(doc, "subadd"), "subadd", {"mu", "fractions"});
  c.subadd.mu = sa.number("mu", c.subadd.mu);
  c.subadd.fractions = sa.numbers("fractions", c.subadd.fractions);
  for (double f : c.subadd.fractions) {
    if (!(f > 0.0 && f < 1.0)) throw ConfigError("subadd.fractions", "each fraction must lie in (0, 1)");
  }

  const Block fl(sub(doc, "floor"), "floor", {"boxes"});
  c.floor.boxes = fl.numbers("boxes", c.floor.boxes);
  for (double L : c.floor.boxes) {
    if (!(L > 0.0)) throw ConfigError("floor.boxes", "box lengths must be positive");
  }

  const Block st(sub(doc, "stability"), "stability", {"delta", "perturbation", "direction", "threshold_factor"});
  c.stability.delta = st.number("delta", c.stability.delta);
  if (!(c.stability.delta >= 0.0)) throw ConfigError("stability.delta", "must be nonnegative");
  c.stability.perturbation = parse_perturbation(st.string("perturbation", to_string(c.stability.perturbation)));
  const Vec3& d = c.stability.direction;
  c.stability.direction = vec3(st.numbers("direction", {d[0], d[1], d[2]}), "stability.direction");
  c.stability.threshold_factor = st.number("threshold_factor", c.stability.threshold_factor);
  if (!(c.stability.threshold_factor > 0.0)) throw ConfigError("stability.threshold_factor", "must be positive");

  const Block ev(sub(doc, "evolve"), "evolve", {"init", "path", "width"});
  c.evolve.init = ev.string("init", c.evolve.init);
  if (c.evolve.init != "minimizer" && c.evolve.init != "gaussian" && c.evolve.init != "file") {
    throw ConfigError("evolve.init", "expected minimizer, gaussian or file");
  }
  c.evolve.path = ev.string("path", c.evolve.path);
  if (c.evolve.init == "file" && c.evolve.path.empty()) throw ConfigError("evolve.path", "required for init = file");
  c.evolve.width = ev.number("width", c.evolve.width);
  if (!(c.evolve.width > 0.0)) throw ConfigError("evolve.width", "must be positive");

  const Block ck(sub(doc, "check"), "check", {"field"});
  c.check_field = ck.string("field", c.check_field);
  return c;
}

ordered_json RunConfig::to_json() const {
  ordered_json j;
  j["grid"] = {{"N", grid.N}, {"L", grid.L}};
  j["params"] = {{"p", params.p}, {"e", params.e}};
  j["profile"] = profile_to_json(profile);
  ordered_json mz;
  mz["mu"] = mu;
  mz["tau0"] = minimize.tau0;
  mz["max_iters"] = minimize.max_iters;
  mz["grad_tol"] = minimize.grad_tol;
  mz["energy_tol"] = minimize.energy_tol;
  mz["step"] = to_string(minimize.step);
  mz["init"] = to_string(minimize.init);
  mz["init_width"] = minimize.init_width;
  mz["init_path"] = minimize.init_path;
  mz["restarts"] = minimize.restarts;
  mz["perturbation"] = minimize.perturbation;
  j["minimize"] = mz;
  ordered_json pr;
  pr["dt"] = propagate.dt;
  pr["T"] = propagate.T;
  pr["monitor_stride"] = propagate.monitor_stride;
  pr["power"] = propagate.power;
  pr["hartree"] = propagate.hartree;
  pr["snapshot_every"] = propagate.snapshot_every;
  j["propagate"] = pr;
  j["scan"] = {{"mu", scan.mu}, {"warm_start", scan.warm_start}};
  j["mu_star"] = {{"bracket", {mu_star.lo, mu_star.hi}}, {"tol", mu_star.tol}};
  j["subadd"] = {{"mu", subadd.mu}, {"fractions", subadd.fractions}};
  j["floor"] = {{"boxes", floor.boxes}};
  ordered_json st;
  st["delta"] = stability.delta;
  st["perturbation"] = to_string(stability.perturbation);
  st["direction"] = vec_json(stability.direction);
  st["threshold_factor"] = stability.threshold_factor;
  j["stability"] = st;
  j["evolve"] = {{"init", evolve.init}, {"path", evolve.path}, {"width", evolve.width}};
  j["check"] = {{"field", check_field}};
  j["output"] = output;
  j["seed"] = seed;
  return j;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string RunConfig::hash() const { return sha256_hex(to_json().dump()); }

}  // namespace spdope
