// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include "ragdx/distill/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "ragdx/core/distribution.hpp"
#include "ragdx/core/parallel.hpp"
#include "ragdx/core/rng.hpp"
#include "ragdx/distill/objective.hpp"

namespace ragdx {

std::string_view to_string(RefreshPolicy p) noexcept {
  switch (p) {
    case RefreshPolicy::once: return "once";
    case RefreshPolicy::per_epoch: return "per_epoch";
    case RefreshPolicy::per_step: return "per_step";
  }
  return "per_epoch";
}

RefreshPolicy parse_refresh_policy(std::string_view s) {
  if (s == "once") return RefreshPolicy::once;
  if (s == "per_epoch") return RefreshPolicy::per_epoch;
  if (s == "per_step") return RefreshPolicy::per_step;
  fail(Errc::ParseError, "unknown refresh policy '" + std::string(s) + "'");
}

void TrainerConfig::validate(std::size_t index_size) const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    fail(Errc::ConfigInvalid, "temperature must be positive");
  }
  if (candidates < 2) fail(Errc::ConfigInvalid, "need at least 2 candidates per query");
  if (candidates > index_size) {
    fail(Errc::ConfigInvalid, "candidates per query (" + std::to_string(candidates) +
                                  ") exceeds index size (" + std::to_string(index_size) + ")");
  }
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    fail(Errc::ConfigInvalid, "learning rate must be finite and non-negative");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) fail(Errc::ConfigInvalid, "momentum must be in [0, 1)");
  if (head_order.empty()) fail(Errc::ConfigInvalid, "head order is empty");
  for (std::size_t i = 0; i < head_order.size(); ++i) {
    for (std::size_t j = i + 1; j < head_order.size(); ++j) {
      if (head_order[i] == head_order[j]) fail(Errc::ConfigInvalid, "head listed twice in head order");
    }
  }
}

void to_json(json& j, const TrainerConfig& c) {
  std::vector<std::string> order;
  for (Head h : c.head_order) order.emplace_back(to_string(h));
  j = json{{"temperature", c.temperature}, {"candidates", c.candidates},
           {"learning_rate", c.learning_rate}, {"epochs", c.epochs},
           {"momentum", c.momentum}, {"head_order", order},
           {"seed", c.seed}, {"gradient_check", c.gradient_check},
           {"refresh", to_string(c.refresh)}, {"batch_size", c.batch_size}};
}

void from_json(const json& j, TrainerConfig& c) {
  TrainerConfig d;
  c.temperature = j.value("temperature", d.temperature);
  c.candidates = j.value("candidates", d.candidates);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.epochs = j.value("epochs", d.epochs);
  c.momentum = j.value("momentum", d.momentum);
  c.head_order.clear();
  for (const auto& h : j.value("head_order", std::vector<std::string>{"text", "image"})) {
    c.head_order.push_back(parse_head(h));
  }
  c.seed = j.value("seed", d.seed);
  c.gradient_check = j.value("gradient_check", d.gradient_check);
  c.refresh = parse_refresh_policy(j.value("refresh", std::string("per_epoch")));
  c.batch_size = j.value("batch_size", d.batch_size);
}

namespace {

/// A query's candidate set frozen for a stretch of optimizer steps.
struct Retrieved {
  std::vector<Eigen::VectorXd> embs;
  std::vector<double> gold_probs;
};

struct TrainQuery {
  const Query* query;
  Eigen::VectorXd emb;
  std::size_t gold;
};

Retrieved retrieve(const TrainQuery& tq, const Index& index, const Reader& reader,
                   const ProjectionHead& proj, std::size_t k) {
  const CandidateSet cands = top_k(tq.query->image, index, proj.head, proj, k);
  Retrieved r;
  r.embs.reserve(k);
  r.gold_probs.reserve(k);
  for (const auto& c : cands.items) {
    const IndexRecord& rec = index.get(c.id);
    r.embs.push_back(to_vector(rec.embedding(proj.head)));
    r.gold_probs.push_back(reader.score_candidate(*tq.query, rec)[tq.gold]);
  }
  return r;
}

bool is_uniform(const std::vector<double>& p) {
  const double u = 1.0 / double(p.size());
  return std::all_of(p.begin(), p.end(), [u](double v) { return std::abs(v - u) <= 1e-9; });
}

struct BatchOutcome {
  double loss_sum = 0.0;
  std::size_t uniform = 0;
  Eigen::MatrixXd grad_w;
  Eigen::VectorXd grad_b;
};

BatchOutcome evaluate_batch(std::span<const std::size_t> members,
                            const std::vector<TrainQuery>& queries,
                            const std::vector<Retrieved>& retrieved, const ProjectionHead& proj,
                            double temperature, std::size_t jobs) {
  std::vector<QueryObjective> objectives(members.size());
  parallel_for(members.size(), jobs, [&](std::size_t i) {
    const std::size_t qi = members[i];
    objectives[i] = evaluate_query(queries[qi].emb, retrieved[qi].embs, retrieved[qi].gold_probs,
                                   proj, temperature);
  });
  const auto d = static_cast<Eigen::Index>(proj.dimension());
  BatchOutcome out{0.0, 0, Eigen::MatrixXd::Zero(d, d), Eigen::VectorXd::Zero(d)};
  for (const auto& obj : objectives) {
    out.loss_sum += obj.loss;
    if (is_uniform(obj.posterior)) {
      ++out.uniform;
      continue;
    }
    out.grad_w += obj.gradient.weight;
    out.grad_b += obj.gradient.bias;
  }
  return out;
}

void check_gradient(const TrainQuery& tq, const Retrieved& r, const ProjectionHead& proj,
                    double temperature) {
  const auto analytic = evaluate_query(tq.emb, r.embs, r.gold_probs, proj, temperature).gradient;
  const double h = 1e-4;
  const auto d = static_cast<Eigen::Index>(proj.dimension());
  double max_rel = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const Eigen::Index j = (i * 7 + 3) % d;
    ProjectionHead plus = proj, minus = proj;
    plus.weight(i, j) += h;
    minus.weight(i, j) -= h;
    const double fd = (evaluate_query(tq.emb, r.embs, r.gold_probs, plus, temperature).loss -
                       evaluate_query(tq.emb, r.embs, r.gold_probs, minus, temperature).loss) /
                      (2 * h);
    const double a = analytic.weight(i, j);
    const double scale = std::max({std::abs(fd), std::abs(a), 1e-6});
    max_rel = std::max(max_rel, std::abs(fd - a) / scale);
  }
  if (max_rel > 1e-4) {
    fail(Errc::InvariantViolation, "gradient check failed: relative error " +
                                       std::to_string(max_rel));
  }
}

}  // namespace

TrainResult train_head(const Index& index, std::span<const Query> queries, const Reader& reader,
                       const ProjectionHead& initial, const TrainerConfig& config) {
  config.validate(index.size());
  if (initial.dimension() != index.dimension()) {
    fail(Errc::DimensionMismatch, "projection head dimension differs from the index");
  }

  std::vector<TrainQuery> train;
  for (const auto& q : queries) {
    if (q.task == TaskKind::vqa_open) continue;
    auto gold = q.gold_index();
    if (!gold) fail(Errc::InvalidArgument, "query " + q.id + " has no gold class");
    train.push_back({&q, to_vector(q.image), *gold});
  }
  if (train.empty()) fail(Errc::EmptyEvalSet, "no closed-form queries to train on");

  TrainResult result{initial, {}};
  ProjectionHead& proj = result.head;
  const auto d = static_cast<Eigen::Index>(proj.dimension());
  Eigen::MatrixXd vel_w = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd vel_b = Eigen::VectorXd::Zero(d);
  std::vector<Retrieved> retrieved(train.size());
  const std::size_t k = config.candidates;
  const double n = double(train.size());

  auto refresh = [&](std::span<const std::size_t> members) {
    parallel_for(members.size(), config.jobs, [&](std::size_t i) {
      retrieved[members[i]] = retrieve(train[members[i]], index, reader, proj, k);
    });
  };
  std::vector<std::size_t> all(train.size());
  std::iota(all.begin(), all.end(), std::size_t{0});

  const std::size_t batch = config.batch_size == 0 ? train.size()
                                                   : std::min(config.batch_size, train.size());
  for (std::size_t epoch = 0; epoch <= config.epochs; ++epoch) try {
    const bool final_pass = epoch == config.epochs;
    if (epoch == 0 || config.refresh != RefreshPolicy::once) refresh(all);
    if (epoch == 0 && config.gradient_check) {
      check_gradient(train.front(), retrieved.front(), proj, config.temperature);
    }

    std::vector<std::size_t> order = all;
    if (batch < train.size()) {
      SplitMix64 rng(derive_seed(config.seed, epoch, static_cast<std::uint64_t>(proj.head)));
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    }

    EpochStats stats{epoch, proj.head, 0.0, 0.0, 0};
    Eigen::MatrixXd epoch_gw = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd epoch_gb = Eigen::VectorXd::Zero(d);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::span<const std::size_t> members(order.data() + start,
                                                 std::min(batch, order.size() - start));
      if (start > 0 && config.refresh == RefreshPolicy::per_step) refresh(members);
      BatchOutcome b = evaluate_batch(members, train, retrieved, proj, config.temperature,
                                      config.jobs);
      stats.mean_kl += b.loss_sum / n;
      stats.uniform_queries += b.uniform;
      epoch_gw += b.grad_w / n;
      epoch_gb += b.grad_b / n;
      if (final_pass) continue;

      const double m = double(members.size());
      vel_w = config.momentum * vel_w - config.learning_rate * (b.grad_w / m);
      vel_b = config.momentum * vel_b - config.learning_rate * (b.grad_b / m);
      proj.weight += vel_w;
      proj.bias += vel_b;
      if (!proj.is_finite()) {
        fail(Errc::DivergedLoss, "head parameters became non-finite in epoch " +
                                     std::to_string(epoch));
      }
    }
    stats.grad_norm = std::sqrt(epoch_gw.squaredNorm() + epoch_gb.squaredNorm());
    if (!std::isfinite(stats.mean_kl)) {
      fail(Errc::DivergedLoss, "mean KL became non-finite in epoch " + std::to_string(epoch));
    }
    result.history.push_back(stats);
  } catch (const Error& e) {
    // Once the parameters have moved, overflowing scores mean divergence.
    if (e.code() == Errc::NonFinite && epoch > 0) {
      fail(Errc::DivergedLoss, "scores became non-finite in epoch " + std::to_string(epoch) +
                                   ": " + e.what());
    }
    throw;
  }
  return result;
}

SequentialResult train_sequential(const Index& index, std::span<const Query> queries,
                                  const Reader& reader, const TrainerConfig& config,
                                  const HeadPair& initial) {
  config.validate(index.size());
  SequentialResult out{initial, {}};
  for (Head h : config.head_order) {
    TrainResult run = train_head(index, queries, reader, out.heads[h], config);
    out.heads[h] = run.head;
    out.runs.push_back(std::move(run));
  }
  return out;
}

namespace {
constexpr std::string_view kHistoryFormat = "ragdx.loss-history";
constexpr int kHistoryVersion = 1;
}  // namespace

void write_loss_history(std::span<const EpochStats> history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot open " + path.string() + " for writing");
  write_format_header(out, kHistoryFormat, kHistoryVersion);
  for (const auto& s : history) {
    out << json{{"epoch", s.epoch},
                {"head", to_string(s.head)},
                {"mean_kl", s.mean_kl},
                {"grad_norm", s.grad_norm},
                {"uniform_queries", s.uniform_queries}}
               .dump()
        << '\n';
  }
}

std::vector<EpochStats> read_loss_history(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::ArtifactMissing, "loss history not found: " + path.string());
  expect_format_header(in, kHistoryFormat, kHistoryVersion, path.string());
  std::vector<EpochStats> out;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json j = parse_json_line(line, path.string(), line_no);
    out.push_back({j.at("epoch").get<std::size_t>(), parse_head(j.at("head").get<std::string>()),
                   j.at("mean_kl").get<double>(), j.at("grad_norm").get<double>(),
                   j.value("uniform_queries", std::size_t{0})});
  }
  return out;
}

}  // namespace ragdx
