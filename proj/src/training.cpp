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

#include "adaf/training.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "adaf/metrics.hpp"

namespace adaf::training {

using nlohmann::json;

std::string to_string(Schedule schedule) {
  switch (schedule) {
    case Schedule::kCosine: return "cosine";
    case Schedule::kLinear: return "linear";
    case Schedule::kExponential: return "exponential";
  }
  return "?";
}

Schedule parse_schedule(const std::string& text) {
  if (text == "cosine") return Schedule::kCosine;
  if (text == "linear") return Schedule::kLinear;
  if (text == "exponential") return Schedule::kExponential;
  fail(ErrorKind::kValidation,
       "train.schedule: expected cosine, linear or exponential, got '" + text + "'");
}

void TrainConfig::validate() const {
  auto bad = [](const std::string& field, const std::string& why) {
    fail(ErrorKind::kValidation, "train." + field + ": " + why);
  };
  if (epochs < 1) bad("epochs", "must be >= 1");
  if (!(lr_end > 0.0)) bad("lr_end", "must be > 0");
  if (!(lr_start >= lr_end)) bad("lr_start", "must be >= lr_end");
  if (batch_size < 1) bad("batch_size", "must be >= 1");
  if (!(huber_delta > 0.0)) bad("huber_delta", "must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) bad("beta1", "must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) bad("beta2", "must be in [0, 1)");
  if (!(eps > 0.0)) bad("eps", "must be > 0");
  if (checkpoint_every < 1) bad("checkpoint_every", "must be >= 1");
  if (top_k < 1) bad("top_k", "must be >= 1");
}

double lr_at(std::size_t epoch, const TrainConfig& config) {
  if (epoch >= config.epochs) {
    fail(ErrorKind::kContract, "lr_at: epoch " + std::to_string(epoch) + " outside [0, " +
                                   std::to_string(config.epochs) + ")");
  }
  if (epoch == 0 || config.epochs == 1) return config.lr_start;
  if (epoch == config.epochs - 1) return config.lr_end;
  const double t = static_cast<double>(epoch) / static_cast<double>(config.epochs - 1);
  const double hi = config.lr_start, lo = config.lr_end;
  switch (config.schedule) {
    case Schedule::kCosine: return lo + 0.5 * (hi - lo) * (1.0 + std::cos(std::numbers::pi * t));
    case Schedule::kLinear: return hi + (lo - hi) * t;
    case Schedule::kExponential: return hi * std::pow(lo / hi, t);
  }
  return hi;
}

Adam::Adam(const ParamSet<float>& params, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& [name, var] : params.entries()) {
    m_.emplace_back(var.shape());
    v_.emplace_back(var.shape());
  }
}

void Adam::step(ParamSet<float>& params, double lr) {
  auto& entries = params.entries();
  if (entries.size() != m_.size()) {
    fail(ErrorKind::kContract, "adam: parameter count changed since construction");
  }
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  const auto b1 = static_cast<float>(beta1_), b2 = static_cast<float>(beta2_);
  const auto step_size = static_cast<float>(lr / c1);
  const auto inv_sqrt_c2 = static_cast<float>(1.0 / std::sqrt(c2));
  const auto eps = static_cast<float>(eps_);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& var = entries[i].second;
    if (!var.has_grad()) continue;
    auto w = var.mutable_value().data();
    auto g = var.grad_ref().data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = b1 * m[j] + (1.0f - b1) * g[j];
      v[j] = b2 * v[j] + (1.0f - b2) * g[j] * g[j];
      w[j] -= step_size * m[j] / (std::sqrt(v[j]) * inv_sqrt_c2 + eps);
    }
  }
}

EvalReport evaluate(const Model<float>& model, const io::Dataset& dataset,
                    const EvalOptions& options) {
  if (dataset.items.empty()) fail(ErrorKind::kContract, "evaluate: empty dataset");
  ad::NoGradGuard no_grad;
  const std::size_t C = dataset.classes.size();
  EvalReport report;
  report.split = dataset.split;
  report.classes = dataset.classes;
  report.top_k = options.top_k;

  // Per source clip: summed chunk logits, chunk count, label.
  std::vector<std::string> clip_order;
  std::map<std::string, std::pair<std::vector<double>, std::size_t>> clip_scores;
  std::map<std::string, const std::vector<float>*> clip_labels;
  std::vector<double> patch_logits, patch_targets;
  double loss_sum = 0.0;
  std::size_t items = 0;

  std::mt19937_64 unused_rng(0);
  auto it = io::BatchIterator::ordered(dataset, options.batch_size);
  while (auto batch = it.next()) {
    const auto out = model.forward(batch->patches, false, unused_rng);
    const auto loss = model.loss(out, batch->labels, options.huber_delta);
    const std::size_t B = batch->indices.size();
    loss_sum += static_cast<double>(loss.value()[0]) * static_cast<double>(B);
    items += B;
    const auto tokens = model.backbone().token_logits(out.encoded);
    const std::size_t T = tokens.shape()[1];
    for (std::size_t b = 0; b < B; ++b) {
      const auto& item = dataset.items[batch->indices[b]];
      auto [pos, fresh] = clip_scores.try_emplace(item.source_id, std::vector<double>(C, 0.0), 0);
      if (fresh) {
        clip_order.push_back(item.source_id);
        clip_labels[item.source_id] = &item.label;
      }
      for (std::size_t c = 0; c < C; ++c) pos->second.first[c] += out.logits.value()[b * C + c];
      ++pos->second.second;
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t c = 0; c < C; ++c) {
          patch_logits.push_back(tokens.value()[(b * T + t) * C + c]);
          patch_targets.push_back(item.label[c]);
        }
      }
    }
  }
  report.loss = loss_sum / static_cast<double>(items);

  const std::size_t N = clip_order.size();
  Tensor<double> scores(Shape{N, C}), targets(Shape{N, C});
  for (std::size_t i = 0; i < N; ++i) {
    const auto& [sum, count] = clip_scores.at(clip_order[i]);
    const auto& label = *clip_labels.at(clip_order[i]);
    for (std::size_t c = 0; c < C; ++c) {
      scores[i * C + c] = sum[c] / static_cast<double>(count);
      targets[i * C + c] = label[c];
    }
  }
  const auto ap = metrics::mean_average_precision(scores, targets);
  report.map = ap.map;
  report.per_class_ap = ap.per_class;
  report.clip_accuracy = metrics::argmax_accuracy(scores, targets);
  report.n_clips = N;

  const std::size_t M = patch_logits.size() / C;
  report.n_patches = M;
  report.top_k_patch = metrics::top_k_accuracy(Tensor<double>(Shape{M, C}, std::move(patch_logits)),
                                               Tensor<double>(Shape{M, C}, std::move(patch_targets)),
                                               options.top_k);
  return report;
}

namespace {

json nullable(const std::vector<double>& values) {
  json arr = json::array();
  for (double v : values) {
    if (std::isfinite(v)) arr.push_back(v);
    else arr.push_back(nullptr);
  }
  return arr;
}

}  // namespace

json to_json(const EvalReport& r) {
  return {{"split", r.split},         {"classes", r.classes},
          {"loss", r.loss},           {"map", r.map},
          {"per_class_ap", nullable(r.per_class_ap)},
          {"top_k", r.top_k},         {"top_k_patch", r.top_k_patch},
          {"clip_accuracy", r.clip_accuracy},
          {"n_clips", r.n_clips},     {"n_patches", r.n_patches}};
}

std::string per_class_csv(const EvalReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "class,ap\n";
  for (std::size_t c = 0; c < r.classes.size(); ++c) {
    const auto& name = r.classes[c];
    if (name.find_first_of(",\"\n") != std::string::npos) {
      out << '"';
      for (char ch : name) out << (ch == '"' ? "\"\"" : std::string(1, ch));
      out << '"';
    } else {
      out << name;
    }
    out << ',';
    if (std::isfinite(r.per_class_ap[c])) out << r.per_class_ap[c];
    out << '\n';
  }
  return out.str();
}

json to_json(const EpochMetrics& m) {
  return {{"epoch", m.epoch},
          {"lr", m.lr},
          {"train_loss", m.train_loss},
          {"valid_loss", m.valid_loss},
          {"map", m.map},
          {"top_k_patch", m.top_k_patch},
          {"clip_accuracy", m.clip_accuracy},
          {"per_class_ap", nullable(m.per_class_ap)}};
}

EpochMetrics epoch_metrics_from_json(const json& j) {
  EpochMetrics m;
  try {
    m.epoch = j.at("epoch").get<std::size_t>();
    m.lr = j.at("lr").get<double>();
    m.train_loss = j.at("train_loss").get<double>();
    m.valid_loss = j.at("valid_loss").get<double>();
    m.map = j.at("map").get<double>();
    m.top_k_patch = j.at("top_k_patch").get<double>();
    m.clip_accuracy = j.at("clip_accuracy").get<double>();
    for (const auto& v : j.at("per_class_ap")) {
      m.per_class_ap.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                           : v.get<double>());
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::kValidation, std::string("metrics line: ") + e.what());
  }
  return m;
}

}  // namespace adaf::training
