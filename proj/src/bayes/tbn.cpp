// SPDX-License-Identifier: Apache-2.0

#include "bfi/bayes/tbn.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "bfi/ads.hpp"
#include "bfi/csv.hpp"

namespace bfi::bayes {

namespace {

const char* kSliceLabel[kSlices] = {"k-1", "k", "k+1"};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

}  // namespace

TemporalBayesNet TemporalBayesNet::build(const std::vector<VariableSpec>& variables) {
  TemporalBayesNet t;
  const std::size_t nv = variables.size();
  t.first_.resize(nv);
  t.width_.resize(nv);
  t.categories_.resize(nv);
  for (std::size_t v = 0; v < nv; ++v) {
    const VariableSpec& s = variables[v];
    if (index(s.id) != v) throw std::invalid_argument("variables must be in registry order");
    t.first_[v] = t.slice_.size();
    if (s.kind == VarKind::categorical) {
      t.categories_[v] = s.categories.size();
      for (std::size_t c = 1; c < s.categories.size(); ++c) {
        t.slice_.push_back({s.id, static_cast<int>(c), s.name + "=" + s.categories[c]});
      }
    } else {
      t.categories_[v] = 0;
      t.slice_.push_back({s.id, -1, s.name});
    }
    t.width_[v] = t.slice_.size() - t.first_[v];
  }

  const std::size_t S = t.slice_.size();
  auto expand = [&](const std::vector<VarId>& vars, std::size_t slice) {
    std::vector<std::size_t> out;
    for (VarId p : vars) {
      const std::size_t v = index(p);
      if (v >= nv) throw std::invalid_argument("input refers to an unknown variable");
      for (std::size_t j = 0; j < t.width_[v]; ++j) out.push_back(slice * S + t.first_[v] + j);
    }
    return out;
  };
  for (std::size_t slice = 0; slice < kSlices; ++slice) {
    for (std::size_t k = 0; k < S; ++k) {
      const VariableSpec& s = variables[index(t.slice_[k].var)];
      std::vector<std::size_t> parents = expand(s.inputs, slice);
      if (slice > 0) {
        const auto prev = expand(s.prev_inputs, slice - 1);
        parents.insert(parents.end(), prev.begin(), prev.end());
      }
      const int group = static_cast<int>(slice == 0 ? k : S + k);
      t.net_.add_node(t.slice_[k].name + "@" + kSliceLabel[slice], std::move(parents), {}, group);
    }
  }
  t.net_.validate();
  return t;
}

std::vector<std::size_t> TemporalBayesNet::nodes_of(VarId var, std::size_t slice) const {
  const std::size_t v = index(var);
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < width_.at(v); ++j) out.push_back(node(slice, first_[v] + j));
  return out;
}

void TemporalBayesNet::encode(const VarFrame& frame, std::span<double> out) const {
  if (out.size() != slice_.size()) throw std::invalid_argument("encode: wrong output size");
  for (std::size_t k = 0; k < slice_.size(); ++k) {
    const SliceNode& n = slice_[k];
    const double value = frame[index(n.var)];
    if (n.category < 0) {
      out[k] = value;
    } else {
      const int code = bfi::decode_category(value, static_cast<int>(categories_[index(n.var)]));
      out[k] = code == n.category ? 1.0 : 0.0;
    }
  }
}

std::vector<double> TemporalBayesNet::encode(const VarFrame& frame) const {
  std::vector<double> out(slice_.size());
  encode(frame, out);
  return out;
}

int TemporalBayesNet::decode_category(VarId var, std::span<const double> indicator_means) const {
  const std::size_t v = index(var);
  if (indicator_means.size() + 1 != categories_.at(v))
    throw std::invalid_argument("indicator block size mismatch");
  double rest = 1.0;
  int best = 0;
  double best_mass = -1.0;
  for (std::size_t c = 0; c < indicator_means.size(); ++c) {
    rest -= indicator_means[c];
    if (indicator_means[c] > best_mass) {
      best_mass = indicator_means[c];
      best = static_cast<int>(c) + 1;
    }
  }
  return rest > best_mass ? 0 : best;
}

Assignment TemporalBayesNet::fault_assignment(const FaultType& fault, std::size_t slice,
                                              const VarFrame& golden) const {
  const double value = apply_rule(fault, golden[index(fault.var)]);
  const auto nodes = nodes_of(fault.var, slice);
  Assignment a;
  if (categories_[index(fault.var)] == 0) {
    a.push_back({nodes.front(), value});
    return a;
  }
  const int code = bfi::decode_category(value, static_cast<int>(categories_[index(fault.var)]));
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    a.push_back({nodes[j], static_cast<int>(j) + 1 == code ? 1.0 : 0.0});
  }
  return a;
}

void save_model(const std::filesystem::path& path, const TemporalBayesNet& tbn) {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write model " + path.string());
  const LinearGaussianNet& net = tbn.net();
  out << "# temporal linear-Gaussian network\n";
  out << "format\t1\n";
  out << "digest\t" << std::hex << tbn.digest() << std::dec << "\n";
  out << "trained\t" << (tbn.trained ? 1 : 0) << "\n";
  out << "slices\t" << kSlices << "\n";
  out << "variables";
  for (const auto& s : registry()) out << '\t' << s.name;
  out << "\nnodes\t" << net.size() << "\n";
  out << "# name\tgroup\tsigma\tintercept\tparents\tweights\n";
  out << std::setprecision(17);
  for (const auto& n : net.nodes()) {
    out << n.name << '\t' << n.group << '\t' << n.cpd.sigma << '\t' << n.cpd.intercept << '\t';
    for (std::size_t j = 0; j < n.parents.size(); ++j) out << (j ? ";" : "") << net.node(n.parents[j]).name;
    out << '\t';
    for (std::size_t j = 0; j < n.cpd.weights.size(); ++j) out << (j ? ";" : "") << n.cpd.weights[j];
    out << '\n';
  }
  if (!out) throw ModelError("failed writing model " + path.string());
}

TemporalBayesNet load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model " + path.string());
  TemporalBayesNet tbn = TemporalBayesNet::build();
  LinearGaussianNet& net = tbn.net();
  std::string line;
  std::size_t next = 0;
  bool saw_digest = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto f = split(line, '\t');
    if (f.empty()) continue;
    if (f[0] == "format") {
      if (f.size() < 2 || f[1] != "1") throw ModelError("unsupported model format");
    } else if (f[0] == "digest") {
      if (f.size() < 2 || std::stoull(f[1], nullptr, 16) != tbn.digest())
        throw ModelError("model topology does not match the variable registry");
      saw_digest = true;
    } else if (f[0] == "trained") {
      tbn.trained = f.size() > 1 && f[1] == "1";
    } else if (f[0] == "slices") {
      if (f.size() < 2 || std::stoul(f[1]) != kSlices) throw ModelError("model slice count mismatch");
    } else if (f[0] == "variables") {
      if (f.size() != registry().size() + 1) throw ModelError("model variable list mismatch");
      for (std::size_t i = 0; i < registry().size(); ++i) {
        if (f[i + 1] != registry()[i].name) throw ModelError("model variable mismatch: " + f[i + 1]);
      }
    } else if (f[0] == "nodes") {
      if (f.size() < 2 || std::stoul(f[1]) != net.size()) throw ModelError("model node count mismatch");
    } else {
      if (next >= net.size()) throw ModelError("too many nodes in model");
      Node& n = net.node(next);
      if (f.size() < 4 || f[0] != n.name) throw ModelError("unexpected node line: " + f[0]);
      try {
        n.cpd.sigma = parse_number(f[2]);
        n.cpd.intercept = parse_number(f[3]);
        const auto parents = split(f.size() > 4 ? f[4] : "", ';');
        const auto weights = split(f.size() > 5 ? f[5] : "", ';');
        if (parents.size() != n.parents.size() || weights.size() != n.parents.size())
          throw ModelError("parent list mismatch for " + n.name);
        for (std::size_t j = 0; j < parents.size(); ++j) {
          if (parents[j] != net.node(n.parents[j]).name)
            throw ModelError("parent mismatch for " + n.name);
          n.cpd.weights[j] = parse_number(weights[j]);
        }
      } catch (const std::invalid_argument&) {
        throw ModelError("malformed number in model line for " + n.name);
      }
      if (!(n.cpd.sigma > 0) || !std::isfinite(n.cpd.intercept))
        throw ModelError("invalid CPD for " + n.name);
      ++next;
    }
  }
  if (!saw_digest) throw ModelError("model without digest");
  if (next != net.size()) throw ModelError("model is missing nodes");
  return tbn;
}

}  // namespace bfi::bayes
