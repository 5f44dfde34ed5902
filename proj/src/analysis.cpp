/*
 * Copyright 2026 The adaf Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "adaf/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

namespace adaf::analysis {

std::vector<PatchRoutes> route_weights(const Model<float>& model, const io::Dataset& dataset,
                                       std::size_t batch_size) {
  const auto& fe = model.front_end();
  if (fe.config().kind == frontend::Kind::kBaseline) {
    fail(ErrorKind::kUnsupportedAnalysis, "routing analysis needs a moe or bank-of-filterbanks model");
  }
  ad::NoGradGuard no_grad;
  std::vector<PatchRoutes> out;
  auto it = io::BatchIterator::ordered(dataset, batch_size);
  while (auto batch = it.next()) {
    const auto router = fe.route(ad::constant(batch->patches));
    const auto& w = router.weights.value();
    const std::size_t T = w.dim(1), N = w.dim(2);
    for (std::size_t b = 0; b < batch->indices.size(); ++b) {
      const auto& item = dataset.items[batch->indices[b]];
      PatchRoutes r{item.clip_id, item.source_id, item.label, Tensor<double>(Shape{T, N})};
      for (std::size_t i = 0; i < T * N; ++i) r.weights[i] = w[b * T * N + i];
      out.push_back(std::move(r));
    }
  }
  return out;
}

namespace {

void accumulate(RoutingProfile& p, const Tensor<double>& w) {
  const std::size_t T = w.dim(0), N = w.dim(1);
  if (p.mean_weights.empty()) p.mean_weights.assign(N, 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t f = 0; f < N; ++f) p.mean_weights[f] += w[t * N + f];
  p.n_patches += T;
}

void finish(RoutingProfile& p) {
  for (auto& v : p.mean_weights) v /= static_cast<double>(p.n_patches);
}

}  // namespace

std::vector<RoutingProfile> class_profiles(std::span<const PatchRoutes> routes,
                                           const std::vector<std::string>& classes) {
  std::vector<RoutingProfile> acc(classes.size());
  for (std::size_t c = 0; c < classes.size(); ++c) acc[c].name = classes[c];
  for (const auto& r : routes) {
    if (r.label.size() != classes.size()) {
      fail(ErrorKind::kShape, "class_profiles: label of " + r.clip_id + " has wrong length");
    }
    for (std::size_t c = 0; c < classes.size(); ++c)
      if (r.label[c] > 0.5f) accumulate(acc[c], r.weights);
  }
  std::vector<RoutingProfile> out;
  for (auto& p : acc) {
    if (p.n_patches == 0) continue;
    finish(p);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<RoutingProfile> clip_profiles(std::span<const PatchRoutes> routes) {
  std::vector<RoutingProfile> out;
  std::map<std::string, std::size_t> index;
  for (const auto& r : routes) {
    auto [it, fresh] = index.try_emplace(r.source_id, out.size());
    if (fresh) out.push_back({r.source_id, {}, 0});
    accumulate(out[it->second], r.weights);
  }
  for (auto& p : out) finish(p);
  return out;
}

std::vector<RoutingProfile> routing_profiles(const Model<float>& model, const io::Dataset& dataset) {
  const auto routes = route_weights(model, dataset);
  return class_profiles(routes, dataset.classes);
}

DistanceMatrix distance_matrix(std::span<const RoutingProfile> profiles) {
  const std::size_t n = profiles.size();
  const std::size_t dim = n ? profiles[0].mean_weights.size() : 0;
  DistanceMatrix m;
  m.values = Tensor<double>(Shape{n, n});
  for (const auto& p : profiles) {
    if (p.mean_weights.size() != dim) fail(ErrorKind::kShape, "distance_matrix: ragged profiles");
    m.labels.push_back(p.name);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double d = profiles[i].mean_weights[k] - profiles[j].mean_weights[k];
        s += d * d;
      }
      m.values[i * n + j] = m.values[j * n + i] = std::sqrt(s);
    }
  }
  return m;
}

ClusterScore cluster_score(const DistanceMatrix& matrix, std::span<const std::size_t> group) {
  const std::size_t n = matrix.labels.size();
  if (group.size() != n) fail(ErrorKind::kShape, "cluster_score: one group id per row required");
  ClusterScore s;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = matrix.values[i * n + j];
      if (group[i] == group[j]) {
        s.intra += d;
        ++s.intra_pairs;
      } else {
        s.inter += d;
        ++s.inter_pairs;
      }
    }
  }
  if (s.intra_pairs == 0 || s.inter_pairs == 0) {
    fail(ErrorKind::kContract, "cluster_score: need pairs both within and across groups");
  }
  s.intra /= static_cast<double>(s.intra_pairs);
  s.inter /= static_cast<double>(s.inter_pairs);
  return s;
}

std::vector<double> dft_magnitude(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> mag(n / 2 + 1);
  for (std::size_t k = 0; k < mag.size(); ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      // Reduce k*t mod n first so the angle stays small and exact.
      const double angle = 2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
      re += x[t] * std::cos(angle);
      im -= x[t] * std::sin(angle);
    }
    mag[k] = std::hypot(re, im);
  }
  return mag;
}

FilterExport export_filters(const Model<float>& model, std::size_t bank) {
  const auto& fe = model.front_end();
  if (fe.config().kind != frontend::Kind::kBankOfFilterbanks) {
    fail(ErrorKind::kUnsupportedAnalysis, "filter export needs a bank-of-filterbanks model");
  }
  if (bank >= fe.banks().size()) {
    fail(ErrorKind::kContract, "export_filters: bank " + std::to_string(bank) + " out of range [0, " +
                                   std::to_string(fe.banks().size()) + ")");
  }
  const auto& w = fe.banks()[bank].weight.value();
  const std::size_t F = w.dim(0), K = w.dim(1);
  FilterExport out;
  out.bank = bank;
  out.taps = w.cast<double>();
  out.magnitude = Tensor<double>(Shape{F, K / 2 + 1});
  for (std::size_t f = 0; f < F; ++f) {
    const auto mag = dft_magnitude(out.taps.data().subspan(f * K, K));
    std::copy(mag.begin(), mag.end(), out.magnitude.data().begin() + static_cast<std::ptrdiff_t>(f * mag.size()));
  }
  return out;
}

namespace {

double metric_value(const training::EpochMetrics& m, const std::string& metric) {
  if (metric == "lr") return m.lr;
  if (metric == "train_loss") return m.train_loss;
  if (metric == "valid_loss") return m.valid_loss;
  if (metric == "map") return m.map;
  if (metric == "top_k_patch") return m.top_k_patch;
  if (metric == "clip_accuracy") return m.clip_accuracy;
  fail(ErrorKind::kValidation, "compare: unknown metric '" + metric + "'");
}

}  // namespace

CurveTable compare_runs(std::vector<RunCurve> runs, const std::string& metric) {
  if (runs.empty()) fail(ErrorKind::kContract, "compare_runs: no runs");
  bool aligned = true;
  for (auto& r : runs) {
    std::stable_sort(r.entries.begin(), r.entries.end(),
                     [](const auto& a, const auto& b) { return a.epoch < b.epoch; });
    if (r.entries.size() != runs[0].entries.size()) aligned = false;
  }
  if (aligned) {
    for (const auto& r : runs)
      for (std::size_t i = 0; i < r.entries.size(); ++i)
        aligned = aligned && r.entries[i].epoch == runs[0].entries[i].epoch;
  }
  if (!aligned) {
    std::string lengths;
    for (const auto& r : runs) {
      if (!lengths.empty()) lengths += ", ";
      lengths += r.label + "=" + std::to_string(r.entries.size());
    }
    fail(ErrorKind::kAlignment, "runs do not share an epoch axis (epochs per run: " + lengths + ")");
  }
  CurveTable t;
  t.columns.push_back("epoch");
  for (const auto& r : runs) {
    std::string label = r.label;
    for (int k = 2; std::find(t.columns.begin(), t.columns.end(), label) != t.columns.end(); ++k) {
      label = r.label + "#" + std::to_string(k);
    }
    t.columns.push_back(label);
  }
  for (std::size_t i = 0; i < runs[0].entries.size(); ++i) {
    std::vector<double> row{static_cast<double>(runs[0].entries[i].epoch)};
    for (const auto& r : runs) row.push_back(metric_value(r.entries[i], metric));
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string csv_escape(const std::string& cell) {
  if (cell.find_first_of(",\"\r\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string format_number(double value) {
  if (std::isnan(value)) return "";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

std::string to_csv(const CurveTable& table) {
  std::ostringstream out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    out << (i ? "," : "") << csv_escape(table.columns[i]);
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << '\n';
  }
  return out.str();
}

std::string to_csv(const DistanceMatrix& m) {
  std::ostringstream out;
  const std::size_t n = m.labels.size();
  out << "label";
  for (const auto& l : m.labels) out << ',' << csv_escape(l);
  out << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    out << csv_escape(m.labels[i]);
    for (std::size_t j = 0; j < n; ++j) out << ',' << format_number(m.values[i * n + j]);
    out << '\n';
  }
  return out.str();
}

std::string profiles_csv(std::span<const RoutingProfile> profiles) {
  std::ostringstream out;
  out << "name,n_patches";
  const std::size_t n = profiles.empty() ? 0 : profiles[0].mean_weights.size();
  for (std::size_t f = 0; f < n; ++f) out << ",route" << f;
  out << '\n';
  for (const auto& p : profiles) {
    out << csv_escape(p.name) << ',' << p.n_patches;
    for (double w : p.mean_weights) out << ',' << format_number(w);
    out << '\n';
  }
  return out.str();
}

std::string filters_time_csv(const FilterExport& f) {
  std::ostringstream out;
  out << "filter,tap,value\n";
  const std::size_t F = f.taps.dim(0), K = f.taps.dim(1);
  for (std::size_t i = 0; i < F; ++i)
    for (std::size_t k = 0; k < K; ++k) out << i << ',' << k << ',' << format_number(f.taps[i * K + k]) << '\n';
  return out.str();
}

std::string filters_spectrum_csv(const FilterExport& f) {
  std::ostringstream out;
  out << "filter,bin,magnitude\n";
  const std::size_t F = f.magnitude.dim(0), B = f.magnitude.dim(1);
  for (std::size_t i = 0; i < F; ++i)
    for (std::size_t k = 0; k < B; ++k) out << i << ',' << k << ',' << format_number(f.magnitude[i * B + k]) << '\n';
  return out.str();
}

}  // namespace adaf::analysis
