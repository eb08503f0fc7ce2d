// SPDX-License-Identifier: Apache-2.0

#include "bfi/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "bfi/csv.hpp"
#include "bfi/registry.hpp"
#include "bfi/scenario.hpp"

namespace bfi {

double quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("box_stats of an empty sample");
  std::sort(values.begin(), values.end());
  BoxStats b;
  b.n = values.size();
  b.min = values.front();
  b.max = values.back();
  b.q1 = quantile(values, 0.25);
  b.median = quantile(values, 0.5);
  b.q3 = quantile(values, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - 1.5 * iqr;
  const double hi_fence = b.q3 + 1.5 * iqr;
  b.whisker_low = *std::find_if(values.begin(), values.end(), [&](double v) { return v >= lo_fence; });
  b.whisker_high = *std::find_if(values.rbegin(), values.rend(), [&](double v) { return v <= hi_fence; });
  return b;
}

bool exceeds_golden(const RunMetrics& m, const GoldenExtremes& g) {
  return m.min_cipo < g.min_cipo || m.max_lk > g.max_lk;
}

std::vector<MvfRow> module_vulnerability(const std::vector<std::string>& modules,
                                         const std::vector<std::string>& targets,
                                         const std::vector<RunMetrics>& metrics,
                                         const GoldenExtremes& golden) {
  if (targets.size() != metrics.size()) throw std::invalid_argument("targets and metrics differ in length");
  std::vector<MvfRow> rows;
  for (const auto& m : modules) rows.push_back({m, 0, 0, 0.0});
  for (std::size_t i = 0; i < targets.size(); ++i) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const MvfRow& r) { return r.module == targets[i]; });
    if (it == rows.end()) throw std::invalid_argument("experiment targets unknown module " + targets[i]);
    ++it->experiments;
    if (exceeds_golden(metrics[i], golden)) ++it->violations;
  }
  for (auto& r : rows) {
    if (r.experiments > 0)
      r.mvf_percent = 100.0 * static_cast<double>(r.violations) / static_cast<double>(r.experiments);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const MvfRow& a, const MvfRow& b) {
    if (a.mvf_percent != b.mvf_percent) return a.mvf_percent > b.mvf_percent;
    return a.module < b.module;
  });
  return rows;
}

std::vector<double> compensation(std::span<const double> brake_injected,
                                 std::span<const double> brake_golden) {
  const std::size_t n = std::min(brake_injected.size(), brake_golden.size());
  std::vector<double> c(n);
  double si = 0.0;
  double sg = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    si += brake_injected[k];
    sg += brake_golden[k];
    c[k] = si - sg;
  }
  return c;
}

namespace {

struct TraceSummary {
  RunMetrics metrics;
  std::vector<double> brake;
};

TraceSummary summarize(const std::filesystem::path& p) {
  if (!std::filesystem::exists(p)) throw std::runtime_error("missing trace " + p.string());
  const TraceFile t = read_trace(p);
  if (t.frames.empty()) throw std::runtime_error("empty trace " + p.string());
  TraceSummary s;
  std::vector<HazardSample> samples;
  for (const auto& f : t.frames) {
    samples.push_back(f.hazard);
    s.brake.push_back(f.vars[index(VarId::brake)]);
  }
  s.metrics = run_metrics(samples, SafetyParams{});
  return s;
}

std::string numbered(const char* prefix, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%05zu.csv", prefix, i);
  return buf;
}

struct ManifestRow {
  std::size_t index = 0;
  std::string module;
  std::uint64_t sim_seed = 0;
};

struct Campaign {
  std::string label;
  std::string scenario;
  std::string model;
  std::vector<ManifestRow> rows;
  std::vector<TraceSummary> runs;
  std::map<std::uint64_t, TraceSummary> golden;  // by seed
  GoldenExtremes extremes;
};

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p, const char* header) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::string line;
  std::getline(in, line);
  if (line != header) throw std::runtime_error(p.string() + ": unexpected header");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(split_csv_line(line));
  }
  return rows;
}

Campaign load_campaign(const std::filesystem::path& dir) {
  Campaign c;
  {
    std::ifstream in(dir / "config.json");
    if (!in) throw std::runtime_error("not a campaign directory: " + dir.string());
    const auto j = nlohmann::json::parse(in);
    c.label = j.at("label").get<std::string>();
    c.scenario = j.at("scenario").get<std::string>();
    c.model = j.at("model").get<std::string>();
  }
  for (const auto& r : read_csv(dir / "manifest.csv", kManifestHeader)) {
    if (r.size() != 11) throw std::runtime_error("malformed manifest row in " + dir.string());
    c.rows.push_back({std::stoul(r[0]), r[5], std::stoull(r[9])});
  }
  std::set<std::size_t> seen;
  for (const auto& r : c.rows) {
    if (!seen.insert(r.index).second)
      throw std::runtime_error("experiment listed twice in the manifest: " + std::to_string(r.index));
  }
  const auto golden_dir = dir / "golden" / "traces";
  if (!std::filesystem::is_directory(golden_dir))
    throw std::runtime_error("missing golden reference in " + dir.string());
  std::size_t traces = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "traces")) {
    if (e.path().extension() == ".csv") ++traces;
  }
  if (traces != c.rows.size())
    throw std::runtime_error("manifest lists " + std::to_string(c.rows.size()) + " experiments but " +
                             std::to_string(traces) + " traces exist in " + dir.string());
  for (const auto& r : c.rows) {
    c.runs.push_back(summarize(dir / "traces" / numbered("exp_", r.index)));
    if (!c.golden.contains(r.sim_seed))
      c.golden.emplace(r.sim_seed, summarize(golden_dir / numbered("seed_", r.sim_seed)));
  }
  // extremes over the whole golden reference, not only the seeds in use
  bool first = true;
  for (const auto& e : std::filesystem::directory_iterator(golden_dir)) {
    if (e.path().extension() != ".csv") continue;
    const RunMetrics m = summarize(e.path()).metrics;
    if (first || m.min_cipo < c.extremes.min_cipo) c.extremes.min_cipo = m.min_cipo;
    if (first || m.max_lk > c.extremes.max_lk) c.extremes.max_lk = m.max_lk;
    first = false;
  }
  if (first) throw std::runtime_error("missing golden reference in " + dir.string());
  return c;
}

std::vector<std::string> all_modules() {
  std::set<std::string> s;
  for (VarId v : injectable_variables()) s.insert(module_of(v));
  return {s.begin(), s.end()};
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

void box_rows(std::ostream& out, const std::string& label, const std::vector<RunMetrics>& ms) {
  std::vector<double> cipo;
  std::vector<double> lk;
  for (const auto& m : ms) {
    cipo.push_back(m.min_cipo);
    lk.push_back(m.max_lk);
  }
  for (const auto& [name, values] : {std::pair{"min_cipo", cipo}, std::pair{"max_lk", lk}}) {
    const BoxStats b = box_stats(values);
    out << label << ',' << name << ',' << b.n << ',' << format_number(b.min) << ','
        << format_number(b.whisker_low) << ',' << format_number(b.q1) << ','
        << format_number(b.median) << ',' << format_number(b.q3) << ','
        << format_number(b.whisker_high) << ',' << format_number(b.max) << '\n';
  }
}

}  // namespace

void write_report(const std::vector<std::filesystem::path>& campaigns,
                  const std::filesystem::path& out) {
  if (campaigns.empty()) throw std::invalid_argument("report needs at least one campaign directory");
  std::vector<Campaign> cs;
  std::set<std::string> labels;
  for (const auto& d : campaigns) {
    cs.push_back(load_campaign(d));
    if (!labels.insert(cs.back().label).second)
      throw std::runtime_error("duplicate campaign label " + cs.back().label);
  }
  std::filesystem::create_directories(out);
  const auto modules = all_modules();

  auto summary = open_out(out / "report_summary.csv");
  auto box = open_out(out / "boxplot.csv");
  auto mvf = open_out(out / "mvf.csv");
  auto comp = open_out(out / "compensation.csv");
  summary << kReportSummaryHeader << '\n';
  box << kBoxplotHeader << '\n';
  mvf << kMvfHeader << '\n';
  comp << kCompensationHeader << '\n';

  for (const auto& c : cs) {
    std::vector<RunMetrics> ms;
    std::vector<std::string> targets;
    std::size_t hazards = 0;
    for (std::size_t i = 0; i < c.runs.size(); ++i) {
      ms.push_back(c.runs[i].metrics);
      targets.push_back(c.rows[i].module);
      if (c.runs[i].metrics.hazard) ++hazards;
    }
    summary << c.label << ',' << c.scenario << ',' << c.model << ',' << ms.size() << ',' << hazards
            << ',' << format_number(100.0 * static_cast<double>(hazards) / static_cast<double>(ms.size()))
            << ',' << format_number(c.extremes.min_cipo) << ',' << format_number(c.extremes.max_lk)
            << '\n';
    std::vector<RunMetrics> gm;
    for (const auto& [seed, g] : c.golden) gm.push_back(g.metrics);
    box_rows(box, c.label + "/golden", gm);
    box_rows(box, c.label, ms);
    for (const auto& r : module_vulnerability(modules, targets, ms, c.extremes)) {
      mvf << c.label << ',' << r.module << ',' << r.experiments << ',' << r.violations << ','
          << format_number(r.mvf_percent) << '\n';
    }
    for (std::size_t i = 0; i < c.runs.size(); ++i) {
      const auto& g = c.golden.at(c.rows[i].sim_seed);
      const auto curve = compensation(c.runs[i].brake, g.brake);
      for (std::size_t k = 0; k < curve.size(); ++k) {
        comp << c.label << ',' << c.rows[i].index << ',' << k << ','
             << format_number(c.runs[i].brake[k]) << ',' << format_number(g.brake[k]) << ','
             << format_number(curve[k]) << '\n';
      }
    }
  }
}

}  // namespace bfi
