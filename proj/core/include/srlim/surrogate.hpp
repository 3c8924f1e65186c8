#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "srlim/gcn.hpp"
#include "srlim/geodesic.hpp"
#include "srlim/graph.hpp"
#include "srlim/isometry.hpp"
#include "srlim/optimizer.hpp"

namespace srlim {

enum class TrainMode { kCrossEntropy, kSrlim };

// kFrozen: paths found once on the input features. kRecompute: embedding-layer
// paths are re-solved on the current embedding at the start of every epoch.
enum class PathMode { kFrozen, kRecompute };

struct TrainConfig {
  TrainMode mode = TrainMode::kCrossEntropy;
  int epochs = 200;
  int hidden_dim = 16;
  OptimizerConfig optimizer{.kind = OptimizerKind::kGradientDescent, .learning_rate = 1.0};
  double lambda = 1.0;   // weight of the isometric-mapping term
  int batch_size = 512;
  GeodesicConfig geodesic;
  PathMode path_mode = PathMode::kFrozen;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  int epoch = 0;
  double ce = 0.0;
  double im = 0.0;  // batch-mean isometric loss (0 in CE mode)
  double total = 0.0;
};

struct TrainResult {
  GcnModel model;
  std::vector<EpochRecord> history;
};

// Dispatches on cfg.mode. When `progress` is given every finished epoch is
// also appended to it, so the records survive a training failure.
TrainResult train_surrogate(const Graph& g, const TrainConfig& cfg, std::vector<EpochRecord>* progress = nullptr);
// Cross-entropy on train nodes, full-batch, cfg.epochs steps.
TrainResult train_ce(const Graph& g, const TrainConfig& cfg, std::vector<EpochRecord>* progress = nullptr);
// Cross-entropy plus lambda times the mean per-batch isometric loss. Nodes are
// reshuffled into batches of cfg.batch_size every epoch; one optimizer step
// per epoch. lambda == 0 follows exactly the train_ce trajectory.
TrainResult train_srlim(const Graph& g, const TrainConfig& cfg, std::vector<EpochRecord>* progress = nullptr);

// Pre-softmax embedding H^(L) of the trained model on g.
Eigen::MatrixXd embed(const Graph& g, const GcnModel& m);

// Batches plus the per-batch constants one SRLIM step holds fixed.
struct SrlimStepState {
  std::vector<std::vector<NodeId>> batches;
  std::vector<SimilarityMatrix> input;
  std::vector<FrozenCalibration> frozen;
};

// Builds input similarities and embedding calibrations for `batches` at the
// model's current weights.
SrlimStepState prepare_srlim_step(const Graph& g, const NormalizedAdjacency& adj, const GcnModel& m,
                                  const IsometryObjective& iso, std::vector<std::vector<NodeId>> batches);

struct SrlimLoss {
  double ce = 0.0;
  double im = 0.0;
  double total = 0.0;
};

// CE over train nodes + lambda * mean batch isometric loss, with the state's
// constants frozen. Fills grads when given.
SrlimLoss srlim_objective(const Graph& g, const NormalizedAdjacency& adj, const GcnModel& m,
                          const IsometryObjective& iso, const SrlimStepState& state, double lambda,
                          GcnGradients* grads);

}  // namespace srlim
