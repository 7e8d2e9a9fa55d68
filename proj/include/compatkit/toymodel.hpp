#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "compatkit/autodiff.hpp"
#include "compatkit/tensor.hpp"

namespace compatkit::toy {

/// Layer names of the toy network. The two linear weight matrices are adaptable.
inline constexpr const char* kEmbedding = "embedding";
inline constexpr const char* kHiddenWeight = "hidden.weight";
inline constexpr const char* kHiddenBias = "hidden.bias";
inline constexpr const char* kOutputWeight = "output.weight";
inline constexpr const char* kOutputBias = "output.bias";

struct ModelDims {
  std::size_t vocab = 0;
  std::size_t context = 0;
  std::size_t hidden = 0;

  bool operator==(const ModelDims&) const = default;
};

/// Frozen base network: mean-pooled token embeddings -> tanh hidden layer -> vocabulary logits.
struct BaseModel {
  std::string version_tag;
  ModelDims dims;
  std::map<std::string, Tensor2> weights;

  /// Random initialization, deterministic in `seed`.
  static BaseModel random(ModelDims dims, std::uint64_t seed, std::string version_tag);

  const Tensor2& weight(const std::string& name) const;
  /// Throws ShapeError if a weight is missing or has the wrong shape.
  void check_consistent() const;
};

struct LoraPair {
  Tensor2 a;  // in x rank
  Tensor2 b;  // rank x out

  bool operator==(const LoraPair&) const = default;
};

/// Low-rank deltas (alpha / rank) * A * B for named base weights.
struct AdapterSet {
  std::size_t rank = 4;
  double alpha = 8.0;
  std::map<std::string, LoraPair> layers;

  /// A ~ N(0, 0.02^2), B = 0 on every linear layer of `base`.
  static AdapterSet init(const BaseModel& base, std::size_t rank, double alpha, std::uint64_t seed);

  double scale() const { return alpha / static_cast<double>(rank); }
  /// Dense (alpha / rank) * A * B for one layer.
  Tensor2 delta(const std::string& layer) const;

  bool operator==(const AdapterSet&) const = default;
};

/// Per-layer gradients w.r.t. the adapter factors.
struct AdapterGradients {
  std::map<std::string, LoraPair> layers;
};

/// A frozen base plus a task adapter.
struct TaskModel {
  std::shared_ptr<const BaseModel> base;
  AdapterSet adapter;

  const ModelDims& dims() const { return base->dims; }
};

/// Graph handles of the adapter factors, one pair per adapted layer.
struct AdapterVars {
  std::map<std::string, std::pair<Var, Var>> layers;
};

/// Records the forward pass for a batch of contexts on `g`. Row q of the result holds the
/// next-token logits after contexts[q]. Base weights enter as constants; when `params` is
/// non-null the adapter factors enter as parameters and their handles are written there.
Var record_logits(Graph& g, const TaskModel& model, std::span<const std::vector<int>> contexts,
                  AdapterVars* params = nullptr);

/// Next-token logits for a batch of contexts (each 1..L tokens), one row per context.
Tensor2 batch_logits(const TaskModel& model, std::span<const std::vector<int>> contexts);

/// Logits for every prefix of `window`: row p predicts the token after window[0..p].
/// Throws ShapeError for an empty window, one longer than L, or an out-of-range token id.
Tensor2 forward_logits(const TaskModel& model, std::span<const int> window);

/// softmax(logits / T) with max subtraction. Throws DomainError for T <= 0.
std::vector<double> softmax_t(std::span<const double> logits, double temperature);
std::vector<double> log_softmax_t(std::span<const double> logits, double temperature);

/// Backward sweep from `loss`; collects the gradients of the adapter factors in `params`.
AdapterGradients backward(Graph& g, Var loss, const AdapterVars& params);

/// Exact round trip of dims, base weights and adapter factors.
void save_checkpoint(const std::filesystem::path& path, const TaskModel& model);
TaskModel load_checkpoint(const std::filesystem::path& path);

}  // namespace compatkit::toy
