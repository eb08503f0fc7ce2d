// SPDX-License-Identifier: Apache-2.0

#include "bfi/fault.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

#include "bfi/scenario.hpp"

namespace bfi {

std::string FaultType::name() const {
  const VariableSpec& s = spec(var);
  std::ostringstream os;
  os << s.name << ':';
  switch (rule) {
    case Rule::set_max: os << "max"; break;
    case Rule::set_min: os << "min"; break;
    case Rule::double_value: os << "double"; break;
    case Rule::halve: os << "halve"; break;
    case Rule::set_category: os << "cat=" << s.categories.at(category); break;
    case Rule::set_value: os << "value=" << value; break;
    case Rule::bitflip:
      os << "bit=" << bit;
      if (bit2 >= 0) os << '+' << bit2;
      break;
  }
  return os.str();
}

FaultType parse_fault_type(const std::string& name) {
  const auto colon = name.rfind(':');
  if (colon == std::string::npos) throw std::invalid_argument("fault type needs <variable>:<rule>");
  const auto var = find_variable(name.substr(0, colon));
  if (!var) throw std::invalid_argument("unknown variable in fault type " + name);
  const VariableSpec& s = spec(*var);
  if (!s.injectable) throw std::invalid_argument("variable is not injectable: " + s.name);
  const std::string rule = name.substr(colon + 1);
  FaultType f;
  f.var = *var;
  auto need = [&](VarKind k) {
    if (s.kind != k) throw std::invalid_argument("rule does not apply to " + s.name);
  };
  if (rule == "max" || rule == "min") {
    need(VarKind::bounded);
    f.rule = rule == "max" ? Rule::set_max : Rule::set_min;
  } else if (rule == "double" || rule == "halve") {
    need(VarKind::unbounded);
    f.rule = rule == "double" ? Rule::double_value : Rule::halve;
  } else if (rule.starts_with("cat=")) {
    need(VarKind::categorical);
    f.rule = Rule::set_category;
    const std::string c = rule.substr(4);
    bool found = false;
    for (std::size_t i = 0; i < s.categories.size(); ++i) {
      if (s.categories[i] == c) {
        f.category = static_cast<int>(i);
        found = true;
      }
    }
    if (!found) throw std::invalid_argument("unknown category " + c);
  } else if (rule.starts_with("value=")) {
    f.rule = Rule::set_value;
    f.value = std::stod(rule.substr(6));
  } else if (rule.starts_with("bit=")) {
    f.rule = Rule::bitflip;
    const std::string bits = rule.substr(4);
    const auto plus = bits.find('+');
    f.bit = std::stoi(bits.substr(0, plus));
    if (plus != std::string::npos) f.bit2 = std::stoi(bits.substr(plus + 1));
    if (f.bit < 0 || f.bit > 63 || f.bit2 < -1 || f.bit2 > 63)
      throw std::invalid_argument("bit out of range");
    if (f.bit == f.bit2) throw std::invalid_argument("double flip needs distinct bits");
  } else {
    throw std::invalid_argument("unknown rule " + rule);
  }
  return f;
}

const std::vector<FaultType>& fault_catalog() {
  static const std::vector<FaultType> catalog = [] {
    std::vector<FaultType> c;
    for (const auto& s : registry()) {
      if (!s.injectable) continue;
      switch (s.kind) {
        case VarKind::bounded:
          c.push_back({s.id, Rule::set_max});
          c.push_back({s.id, Rule::set_min});
          break;
        case VarKind::unbounded:
          c.push_back({s.id, Rule::double_value});
          c.push_back({s.id, Rule::halve});
          break;
        case VarKind::categorical:
          for (std::size_t i = 0; i < s.categories.size(); ++i) {
            c.push_back({s.id, Rule::set_category, static_cast<int>(i)});
          }
          break;
      }
    }
    return c;
  }();
  return catalog;
}

double flip_bit(double value, int bit) {
  auto u = std::bit_cast<std::uint64_t>(value);
  u ^= (std::uint64_t{1} << bit);
  return std::bit_cast<double>(u);
}

double flip_random_bits(double value, int n_bits, std::uint64_t seed) {
  if (n_bits != 1 && n_bits != 2) throw std::invalid_argument("n_bits must be 1 or 2");
  std::mt19937_64 rng(seed);
  const int a = std::uniform_int_distribution<int>(0, 63)(rng);
  double out = flip_bit(value, a);
  if (n_bits == 2) {
    // second position uniform over the other 63
    int b = std::uniform_int_distribution<int>(0, 62)(rng);
    if (b >= a) ++b;
    out = flip_bit(out, b);
  }
  return out;
}

double apply_rule(const FaultType& f, double current) {
  const VariableSpec& s = spec(f.var);
  switch (f.rule) {
    case Rule::set_max: return s.hi;
    case Rule::set_min: return s.lo;
    case Rule::double_value: return 2.0 * current;
    case Rule::halve: return 0.5 * current;
    case Rule::set_category: return static_cast<double>(f.category);
    case Rule::set_value: return f.value;
    case Rule::bitflip: {
      const double once = flip_bit(current, f.bit);
      return f.bit2 >= 0 ? flip_bit(once, f.bit2) : once;
    }
  }
  return current;
}

std::string to_string(FaultModel m) {
  switch (m) {
    case FaultModel::OneFixed: return "OneFixed";
    case FaultModel::MFixed: return "MFixed";
    case FaultModel::OneRandom: return "OneRandom";
    case FaultModel::MRandom: return "MRandom";
    case FaultModel::BitFlip: return "BitFlip";
  }
  return "OneFixed";
}

FaultModel fault_model_from_string(const std::string& s) {
  for (auto m : {FaultModel::OneFixed, FaultModel::MFixed, FaultModel::OneRandom,
                 FaultModel::MRandom, FaultModel::BitFlip}) {
    if (to_string(m) == s) return m;
  }
  throw std::invalid_argument("unknown fault model " + s);
}

std::uint64_t FaultPlan::digest() const {
  Fnv1a h;
  const std::string text = to_string(model);
  h.add(text.data(), text.size());
  h.add(&start, sizeof start);
  h.add(&duration, sizeof duration);
  for (const auto& t : types) {
    const std::string n = t.name();
    h.add(n.data(), n.size());
  }
  h.add(&seed, sizeof seed);
  return h.value();
}

void FaultPlan::validate(std::size_t scene_count) const {
  const bool single = model == FaultModel::OneFixed || model == FaultModel::OneRandom ||
                      model == FaultModel::BitFlip;
  if (single && duration != 1) throw std::invalid_argument("single-scene fault model with m != 1");
  if (!single && (duration < 10 || duration > 100))
    throw std::invalid_argument("multi-scene fault model needs m in [10, 100]");
  if (start + duration > scene_count) throw std::invalid_argument("fault plan exceeds the run");
  if (types.empty()) throw std::invalid_argument("fault plan without targets");
}

FaultPlan random_plan(FaultModel model, std::size_t scene_count, std::mt19937_64& rng) {
  FaultPlan p;
  p.model = model;
  const bool multi = model == FaultModel::MFixed || model == FaultModel::MRandom;
  p.duration = multi ? std::uniform_int_distribution<std::size_t>(10, 100)(rng) : 1;
  if (scene_count <= p.duration) throw std::invalid_argument("run too short for the fault model");
  p.start = std::uniform_int_distribution<std::size_t>(0, scene_count - p.duration - 1)(rng);
  if (model == FaultModel::OneFixed || model == FaultModel::MFixed) {
    const auto& c = fault_catalog();
    p.types.push_back(c[std::uniform_int_distribution<std::size_t>(0, c.size() - 1)(rng)]);
  } else {
    const auto vars = injectable_variables();
    FaultType t;
    t.var = vars[std::uniform_int_distribution<std::size_t>(0, vars.size() - 1)(rng)];
    if (model == FaultModel::BitFlip) {
      t.rule = Rule::bitflip;
      t.bit = std::uniform_int_distribution<int>(0, 63)(rng);
      if (std::bernoulli_distribution(0.5)(rng)) {
        t.bit2 = std::uniform_int_distribution<int>(0, 62)(rng);
        if (t.bit2 >= t.bit) ++t.bit2;
      }
    } else {
      t.rule = Rule::set_value;
    }
    p.types.push_back(t);
  }
  p.seed = rng();
  return p;
}

Injector::Injector(FaultPlan plan) : plan_(std::move(plan)), rng_(plan_.seed) {}

double Injector::random_value(VarId var, double current) {
  const VariableSpec& s = spec(var);
  switch (s.kind) {
    case VarKind::bounded:
      return std::uniform_real_distribution<double>(s.lo, s.hi)(rng_);
    case VarKind::categorical:
      return static_cast<double>(
          std::uniform_int_distribution<std::size_t>(0, s.categories.size() - 1)(rng_));
    case VarKind::unbounded: {
      if (!std::isfinite(current)) return current;
      const double a = 0.5 * current;
      const double b = 2.0 * current;
      if (a == b) return current;
      return std::uniform_real_distribution<double>(std::min(a, b), std::max(a, b))(rng_);
    }
  }
  return current;
}

void Injector::on_stage(Stage stage, std::size_t scene, VarFrame& vars) {
  if (!plan_.active(scene)) return;
  const bool random = plan_.model == FaultModel::OneRandom || plan_.model == FaultModel::MRandom;
  for (const auto& t : plan_.types) {
    if (spec(t.var).stage != stage) continue;
    double& slot = vars[index(t.var)];
    const double old = slot;
    slot = random ? random_value(t.var, old) : apply_rule(t, old);
    log_.push_back({scene, t.var, old, slot});
  }
}

}  // namespace bfi
