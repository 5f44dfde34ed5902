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

#pragma once

#include <span>
#include <string>
#include <vector>

#include "adaf/model.hpp"
#include "adaf/signal_io.hpp"
#include "adaf/training.hpp"

namespace adaf::analysis {

// Router weights of every patch of one dataset item.
struct PatchRoutes {
  std::string clip_id;
  std::string source_id;
  std::vector<float> label;
  Tensor<double> weights;  // T x N_F
};

struct RoutingProfile {
  std::string name;
  std::vector<double> mean_weights;  // N_F
  std::size_t n_patches = 0;
};

struct DistanceMatrix {
  std::vector<std::string> labels;
  Tensor<double> values;  // n x n, symmetric, zero diagonal
};

struct ClusterScore {
  double intra = 0.0;  // mean distance between members of the same group
  double inter = 0.0;  // mean distance across groups
  std::size_t intra_pairs = 0;
  std::size_t inter_pairs = 0;

  bool separated() const { return inter > intra; }
};

struct FilterExport {
  std::size_t bank = 0;
  Tensor<double> taps;       // F x K
  Tensor<double> magnitude;  // F x (K/2 + 1)
};

struct RunCurve {
  std::string label;
  std::vector<training::EpochMetrics> entries;
};

struct CurveTable {
  std::vector<std::string> columns;  // "epoch", then one per run
  std::vector<std::vector<double>> rows;
};

// Throws unsupported-analysis for single-route (baseline) models.
std::vector<PatchRoutes> route_weights(const Model<float>& model, const io::Dataset& dataset,
                                       std::size_t batch_size = 16);

// Mean router weights per class over all patches of the clips carrying that
// class. Classes with no patches are left out.
std::vector<RoutingProfile> class_profiles(std::span<const PatchRoutes> routes,
                                           const std::vector<std::string>& classes);
// One profile per source clip, in first-seen order.
std::vector<RoutingProfile> clip_profiles(std::span<const PatchRoutes> routes);

std::vector<RoutingProfile> routing_profiles(const Model<float>& model, const io::Dataset& dataset);

DistanceMatrix distance_matrix(std::span<const RoutingProfile> profiles);

// group[i] is the group id of row i of the matrix.
ClusterScore cluster_score(const DistanceMatrix& matrix, std::span<const std::size_t> group);

// |DFT| at bins 0..K/2 by direct summation.
std::vector<double> dft_magnitude(std::span<const double> signal);

FilterExport export_filters(const Model<float>& model, std::size_t bank);

// Sorts each run by epoch and joins on the epoch axis. `metric` is one of
// lr, train_loss, valid_loss, map, top_k_patch, clip_accuracy.
CurveTable compare_runs(std::vector<RunCurve> runs, const std::string& metric = "top_k_patch");

// CSV writers (RFC 4180 quoting for text cells).
std::string csv_escape(const std::string& cell);
std::string format_number(double value);
std::string to_csv(const CurveTable& table);
std::string to_csv(const DistanceMatrix& matrix);
std::string profiles_csv(std::span<const RoutingProfile> profiles);
std::string filters_time_csv(const FilterExport& filters);
std::string filters_spectrum_csv(const FilterExport& filters);

}  // namespace adaf::analysis
