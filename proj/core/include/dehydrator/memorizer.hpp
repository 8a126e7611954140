// Character-level memorizer: a single-layer decoder-only transformer trained
// to reproduce the segmented record corpus, plus greedy generation from a
// query head. Training runs in float32; the gradient checker instantiates the
// same network in double precision against central finite differences.
//
// Block layout (pre-norm): two causal multi-head self-attention sublayers
// followed by a GELU feedforward, three layer-norms, learned positional
// embeddings, and an output projection weight-tied to the token embedding.
// Parameter counts for the C1..C6 capacities land within a few percent of
// their reference budgets at the reference context length.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dehydrator/serializer.hpp"

namespace dehydrator {

enum class Capacity { C1 = 0, C2, C3, C4, C5, C6 };

struct CapacityRow {
    const char* label;
    int embed_dim;
    int n_heads;
    int ff_dim;
    int reference_params_k;
};

const CapacityRow& capacity_row(Capacity c);
bool parse_capacity(const std::string& label, Capacity& out);

struct ModelConfig {
    std::optional<Capacity> capacity;  // unset for custom test configs
    int embed_dim{64};
    int n_heads{2};
    int ff_dim{256};
    int context_len{32};  // == segment length L
    int vocab_size{vocab::kSize};
    std::uint64_t seed{0};

    static ModelConfig for_capacity(Capacity c, int context_len, std::uint64_t seed);
    static ModelConfig custom(int embed_dim, int n_heads, int ff_dim, int context_len,
                              std::uint64_t seed);

    void validate() const;  // throws InvalidConfig
    std::size_t param_count() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct GenerateResult {
    std::vector<TokenId> ids;  // head followed by generated tokens
    bool truncated{false};     // max_len reached before the terminator
};

template <typename F>
class ModelT {
public:
    explicit ModelT(const ModelConfig& cfg);  // deterministic init from cfg.seed

    const ModelConfig& config() const noexcept { return cfg_; }
    std::vector<F>& params() noexcept { return params_; }
    const std::vector<F>& params() const noexcept { return params_; }

    // Causal logits for one sequence; returns T * vocab_size values.
    // Throws ContextOverflow when ids.size() > context_len.
    std::vector<F> forward(const std::vector<TokenId>& ids) const;

    // Summed cross-entropy over positions whose target is not the pad token,
    // with unnormalized gradients accumulated into grad. Returns the summed
    // loss and the number of counted positions.
    std::pair<double, std::size_t> loss_and_grad(const TokenId* window, std::size_t window_len,
                                                 std::vector<F>* grad) const;

    // Greedy decoding (argmax, ties to the lowest token id) over a sliding
    // context of the last context_len tokens. Stops after emitting
    // `terminator` or when the output reaches max_len tokens.
    GenerateResult generate(const std::vector<TokenId>& head, std::size_t max_len,
                            TokenId terminator) const;

private:
    ModelConfig cfg_;
    std::vector<F> params_;
};

using Model = ModelT<float>;

struct TrainOptions {
    int max_epochs{5};
    std::size_t batch_size{4096};
    double learning_rate{1e-3};
    double beta1{0.9};
    double beta2{0.999};
    double epsilon{1e-8};
    // Stop once the epoch-over-epoch loss improvement drops below this value
    // (a regression counts as no improvement); push it to -infinity to always
    // run max_epochs.
    double early_stop_delta{1e-3};
    int threads{1};
};

struct TrainReport {
    int epochs_run{0};
    std::vector<double> epoch_losses;  // mean next-token cross-entropy
    double wall_seconds{0.0};
    bool early_stopped{false};
};

// Adam over shuffled non-overlapping windows; pad targets are masked from the
// loss. Deterministic for fixed (seed, corpus, options, thread count).
// Throws NonFiniteLoss if any batch loss leaves the finite range.
TrainReport train(Model& model, const SegmentedCorpus& corpus, const TrainOptions& options = {});

struct GradCheckResult {
    double max_rel_error{0.0};
    double l1_deviation{0.0};  // summed |analytic - numeric| over all parameters
};

// Central finite differences over every parameter of a tiny double-precision
// model (embed 8, 1 head, ff 16, short context).
GradCheckResult grad_check(double h = 1e-4, std::uint64_t seed = 42);

// Checkpoint: magic + JSON config header + raw little-endian float32 tensors
// in declared parameter order.
void save_checkpoint(const std::string& path, const Model& model);
Model load_checkpoint(const std::string& path);

}  // namespace dehydrator
