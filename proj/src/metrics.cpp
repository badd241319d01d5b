#include "dmon/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace dmon {

namespace {

int infer_k(const std::vector<int>& ids) {
  int k = 1;
  for (int c : ids) {
    if (c < 0) throw ConfigError("negative cluster id");
    k = std::max(k, c + 1);
  }
  return k;
}

void require_aligned(const SparseGraph& g, const HardPartition& p) {
  if (static_cast<std::int64_t>(p.assignments.size()) != g.n()) {
    throw ConfigError("partition length does not match node count");
  }
}

}  // namespace

HardPartition::HardPartition(std::vector<int> ids)
    : assignments(std::move(ids)), k(infer_k(assignments)) {}

HardPartition::HardPartition(std::vector<int> ids, int k_clusters)
    : assignments(std::move(ids)), k(k_clusters) {
  if (k < 1) throw ConfigError("cluster count must be >= 1");
  for (int c : assignments) {
    if (c < 0 || c >= k) throw ConfigError("cluster id out of range");
  }
}

double modularity(const SparseGraph& g, const HardPartition& p) {
  require_aligned(g, p);
  if (g.m() == 0) throw NumericError("modularity undefined on an empty graph");

  const double two_m = 2.0 * static_cast<double>(g.m());
  std::vector<double> internal_ends(p.k, 0.0);
  std::vector<double> volume(p.k, 0.0);
  for (std::int64_t u = 0; u < g.n(); ++u) {
    const int cu = p.assignments[u];
    volume[cu] += g.degrees()[u];
    for (std::int64_t v : g.neighbors(u)) {
      if (p.assignments[v] == cu) internal_ends[cu] += 1.0;
    }
  }
  double q = 0.0;
  for (int c = 0; c < p.k; ++c) {
    const double frac = volume[c] / two_m;
    q += internal_ends[c] / two_m - frac * frac;
  }
  return q;
}

double brute_force_modularity(const SparseGraph& g, const HardPartition& p) {
  require_aligned(g, p);
  if (g.n() > 2000) throw ConfigError("brute-force modularity is guarded to n <= 2000");
  if (g.m() == 0) throw NumericError("modularity undefined on an empty graph");

  const double two_m = 2.0 * static_cast<double>(g.m());
  double q = 0.0;
  for (std::int64_t i = 0; i < g.n(); ++i) {
    for (std::int64_t j = 0; j < g.n(); ++j) {
      if (p.assignments[i] != p.assignments[j]) continue;
      const double a_ij = g.has_edge(i, j) ? 1.0 : 0.0;
      q += a_ij - g.degrees()[i] * g.degrees()[j] / two_m;
    }
  }
  return q / two_m;
}

double mean_conductance(const SparseGraph& g, const HardPartition& p) {
  require_aligned(g, p);

  std::vector<double> internal_ends(p.k, 0.0);
  std::vector<double> cut(p.k, 0.0);
  std::vector<std::int64_t> count(p.k, 0);
  for (std::int64_t u = 0; u < g.n(); ++u) {
    const int cu = p.assignments[u];
    ++count[cu];
    for (std::int64_t v : g.neighbors(u)) {
      if (p.assignments[v] == cu) {
        internal_ends[cu] += 1.0;
      } else {
        cut[cu] += 1.0;
      }
    }
  }
  double sum = 0.0;
  std::int64_t nonempty = 0;
  for (int c = 0; c < p.k; ++c) {
    if (count[c] == 0) continue;
    ++nonempty;
    const double denom = internal_ends[c] + cut[c];  // = 2*m_inside + cut
    if (denom > 0.0) sum += cut[c] / denom;
  }
  return nonempty > 0 ? sum / static_cast<double>(nonempty) : 0.0;
}

namespace {

struct Contingency {
  std::map<std::pair<int, int>, std::int64_t> cells;
  std::vector<std::int64_t> row_sums;
  std::vector<std::int64_t> col_sums;
  std::int64_t n = 0;
};

Contingency contingency_table(const HardPartition& a, const HardPartition& b) {
  if (a.size() != b.size()) throw ConfigError("partition lengths differ");
  Contingency t;
  t.n = static_cast<std::int64_t>(a.size());
  t.row_sums.assign(a.k, 0);
  t.col_sums.assign(b.k, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    t.cells[{a.assignments[i], b.assignments[i]}]++;
    t.row_sums[a.assignments[i]]++;
    t.col_sums[b.assignments[i]]++;
  }
  return t;
}

double entropy(const std::vector<std::int64_t>& counts, std::int64_t n) {
  double h = 0.0;
  for (std::int64_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(n);
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace

double nmi(const HardPartition& pred, const HardPartition& truth) {
  const Contingency t = contingency_table(pred, truth);
  if (t.n == 0) throw ConfigError("empty partitions");

  const double h_pred = entropy(t.row_sums, t.n);
  const double h_truth = entropy(t.col_sums, t.n);
  if (h_pred == 0.0 && h_truth == 0.0) return 1.0;  // both constant
  if (h_pred == 0.0 || h_truth == 0.0) return 0.0;

  const double nd = static_cast<double>(t.n);
  double mi = 0.0;
  for (const auto& [cell, cnt] : t.cells) {
    const double pij = static_cast<double>(cnt) / nd;
    const double pi = static_cast<double>(t.row_sums[cell.first]) / nd;
    const double pj = static_cast<double>(t.col_sums[cell.second]) / nd;
    mi += pij * std::log(pij / (pi * pj));
  }
  mi = std::max(mi, 0.0);  // guard tiny negative rounding
  return mi / (0.5 * (h_pred + h_truth));
}

double pairwise_f1(const HardPartition& pred, const HardPartition& truth) {
  const Contingency t = contingency_table(pred, truth);
  if (t.n < 2) throw ConfigError("pairwise F1 needs at least two nodes");

  auto choose2 = [](std::int64_t c) { return static_cast<double>(c) * (c - 1) / 2.0; };
  double tp = 0.0;
  for (const auto& [cell, cnt] : t.cells) tp += choose2(cnt);
  double pred_pos = 0.0;
  for (std::int64_t c : t.row_sums) pred_pos += choose2(c);
  double truth_pos = 0.0;
  for (std::int64_t c : t.col_sums) truth_pos += choose2(c);

  const double precision = pred_pos > 0.0 ? tp / pred_pos : 0.0;
  const double recall = truth_pos > 0.0 ? tp / truth_pos : 0.0;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

std::string MetricsReport::csv_header() { return "conductance,modularity,nmi,f1"; }

namespace {

std::string fmt1(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", v * 100.0);
  return buf;
}

}  // namespace

std::string MetricsReport::to_csv_row() const {
  std::string row = fmt1(conductance) + "," + fmt1(modularity) + ",";
  row += nmi ? fmt1(*nmi) : std::string();
  row += ",";
  row += f1 ? fmt1(*f1) : std::string();
  return row;
}

MetricsReport MetricsReport::from_csv_row(const std::string& row) {
  if (std::count(row.begin(), row.end(), ',') != 3) {
    throw ConfigError("metrics row must have 4 fields: " + row);
  }
  std::vector<std::string> fields;
  std::stringstream ss(row);
  std::string f;
  while (std::getline(ss, f, ',')) fields.push_back(f);
  while (fields.size() < 4) fields.emplace_back();

  MetricsReport r;
  r.conductance = std::stod(fields[0]) / 100.0;
  r.modularity = std::stod(fields[1]) / 100.0;
  if (!fields[2].empty()) r.nmi = std::stod(fields[2]) / 100.0;
  if (!fields[3].empty()) r.f1 = std::stod(fields[3]) / 100.0;
  return r;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["conductance"] = conductance * 100.0;
  j["modularity"] = modularity * 100.0;
  if (nmi) j["nmi"] = *nmi * 100.0;
  if (f1) j["f1"] = *f1 * 100.0;
  return j.dump();
}

AggregateReport aggregate_reports(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw ConfigError("no reports to aggregate");
  const double n = static_cast<double>(reports.size());
  const bool with_labels =
      std::all_of(reports.begin(), reports.end(), [](const MetricsReport& r) {
        return r.nmi.has_value() && r.f1.has_value();
      });

  auto mean_sd = [n](auto getter, const std::vector<MetricsReport>& rs) {
    double mean = 0.0;
    for (const auto& r : rs) mean += getter(r);
    mean /= n;
    double var = 0.0;
    for (const auto& r : rs) {
      const double d = getter(r) - mean;
      var += d * d;
    }
    return std::pair{mean, std::sqrt(var / n)};
  };

  AggregateReport out;
  auto [cm, cs] = mean_sd([](const MetricsReport& r) { return r.conductance; }, reports);
  auto [qm, qs] = mean_sd([](const MetricsReport& r) { return r.modularity; }, reports);
  out.mean.conductance = cm;
  out.stddev.conductance = cs;
  out.mean.modularity = qm;
  out.stddev.modularity = qs;
  if (with_labels) {
    auto [nm, ns] = mean_sd([](const MetricsReport& r) { return *r.nmi; }, reports);
    auto [fm, fs] = mean_sd([](const MetricsReport& r) { return *r.f1; }, reports);
    out.mean.nmi = nm;
    out.stddev.nmi = ns;
    out.mean.f1 = fm;
    out.stddev.f1 = fs;
  }
  return out;
}

}  // namespace dmon
