#include "srlim/surrogate.hpp"

#include <array>
#include <numeric>
#include <string>

#include "srlim/error.hpp"
#include "srlim/log.hpp"
#include "srlim/rng.hpp"

namespace srlim {
namespace {

constexpr std::uint64_t kBatchStream = 2;
constexpr int kLossWindow = 20;

void check_trainable(const Graph& g, const TrainConfig& cfg) {
  if (!g.has_split()) throw ContractError("training needs a train/test split");
  if (g.train_nodes().empty()) throw ContractError("training needs at least one train node");
  if (cfg.epochs < 0 || cfg.hidden_dim < 1 || cfg.optimizer.learning_rate <= 0.0 || cfg.lambda < 0.0) {
    throw ContractError("invalid training configuration");
  }
}

TrainResult train_loop(const Graph& g, const TrainConfig& cfg, bool isometric, std::vector<EpochRecord>* progress) {
  check_trainable(g, cfg);
  const auto adj = normalize_adjacency(g);
  const auto train = g.train_nodes();

  TrainResult result;
  result.model = init_gcn(g.feature_dim(), cfg.hidden_dim, g.num_classes(), cfg.seed);
  Optimizer opt(cfg.optimizer);

  std::unique_ptr<IsometryObjective> iso;
  std::vector<NodeId> order(static_cast<std::size_t>(g.num_nodes()));
  std::iota(order.begin(), order.end(), 0);
  auto batch_rng = SplitMix64::stream(cfg.seed, kBatchStream);
  if (isometric) {
    if (g.num_nodes() < 2) throw ContractError("isometric training needs at least two nodes");
    iso = std::make_unique<IsometryObjective>(g, cfg.geodesic);
  }

  bool warned = false;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    GcnGradients grads;
    try {
      if (isometric) {
        if (cfg.path_mode == PathMode::kRecompute) iso->recompute_embedding_paths(embed(g, result.model));
        batch_rng.shuffle(std::span<NodeId>(order));
        const auto state = prepare_srlim_step(g, adj, result.model, *iso, make_batches(order, cfg.batch_size));
        const auto loss = srlim_objective(g, adj, result.model, *iso, state, cfg.lambda, &grads);
        rec.ce = loss.ce;
        rec.im = loss.im;
        rec.total = loss.total;
      } else {
        const auto trace = gcn_forward(g.features(), adj.a_hat, result.model);
        Eigen::MatrixXd grad_logits;
        rec.ce = ce_loss_from_logits(trace.logits, g.labels(), train, &grad_logits);
        rec.total = rec.ce;
        grads = gcn_backward(trace, g.features(), adj.a_hat, result.model, grad_logits);
      }
      if (!std::isfinite(rec.total)) throw NumericError("loss is not finite");
    } catch (const NumericError& e) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
    }

    std::array<Eigen::MatrixXd*, 2> params = {&result.model.w0, &result.model.w1};
    std::array<Eigen::MatrixXd, 2> g_list = {std::move(grads.w0), std::move(grads.w1)};
    opt.step(params, g_list);
    result.history.push_back(rec);
    if (progress != nullptr) progress->push_back(rec);

    const auto& h = result.history;
    if (!warned && h.size() > kLossWindow && h.back().total > h[h.size() - 1 - kLossWindow].total) {
      log::warn("training loss rose over a " + std::to_string(kLossWindow) + "-epoch window ending at epoch " +
                std::to_string(epoch));
      warned = true;
    }
  }
  return result;
}

}  // namespace

TrainResult train_surrogate(const Graph& g, const TrainConfig& cfg, std::vector<EpochRecord>* progress) {
  return cfg.mode == TrainMode::kSrlim ? train_srlim(g, cfg, progress) : train_ce(g, cfg, progress);
}

TrainResult train_ce(const Graph& g, const TrainConfig& cfg, std::vector<EpochRecord>* progress) {
  return train_loop(g, cfg, false, progress);
}

TrainResult train_srlim(const Graph& g, const TrainConfig& cfg, std::vector<EpochRecord>* progress) {
  return train_loop(g, cfg, cfg.lambda > 0.0, progress);
}

Eigen::MatrixXd embed(const Graph& g, const GcnModel& m) {
  const auto adj = normalize_adjacency(g);
  return gcn_forward(g.features(), adj.a_hat, m).logits;
}

SrlimStepState prepare_srlim_step(const Graph& g, const NormalizedAdjacency& adj, const GcnModel& m,
                                  const IsometryObjective& iso, std::vector<std::vector<NodeId>> batches) {
  const auto embedding = gcn_forward(g.features(), adj.a_hat, m).logits;
  SrlimStepState state;
  state.batches = std::move(batches);
  for (const auto& batch : state.batches) {
    state.input.push_back(iso.input_similarity(batch));
    state.frozen.push_back(iso.calibrate_embedding(embedding, batch));
  }
  return state;
}

SrlimLoss srlim_objective(const Graph& g, const NormalizedAdjacency& adj, const GcnModel& m,
                          const IsometryObjective& iso, const SrlimStepState& state, double lambda,
                          GcnGradients* grads) {
  const auto trace = gcn_forward(g.features(), adj.a_hat, m);
  const auto train = g.train_nodes();
  SrlimLoss loss;
  Eigen::MatrixXd grad_logits;
  loss.ce = ce_loss_from_logits(trace.logits, g.labels(), train, grads ? &grad_logits : nullptr);

  if (!state.batches.empty()) {
    const double scale = 1.0 / static_cast<double>(state.batches.size());
    Eigen::MatrixXd grad_im;
    if (grads != nullptr) grad_im = Eigen::MatrixXd::Zero(trace.logits.rows(), trace.logits.cols());
    for (std::size_t b = 0; b < state.batches.size(); ++b) {
      loss.im += iso.batch_loss(trace.logits, state.batches[b], state.input[b], state.frozen[b],
                                grads ? &grad_im : nullptr);
    }
    loss.im *= scale;
    if (grads != nullptr) grad_logits += (lambda * scale) * grad_im;
  }
  loss.total = loss.ce + lambda * loss.im;
  if (grads != nullptr) *grads = gcn_backward(trace, g.features(), adj.a_hat, m, grad_logits);
  return loss;
}

}  // namespace srlim
