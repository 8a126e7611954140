#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "dehydrator/memorizer.hpp"

using namespace dehydrator;

namespace {

SegmentedCorpus repeated_record_corpus(int copies, const std::string& record) {
    std::vector<std::string> corpus(static_cast<std::size_t>(copies), record);
    return segment(corpus);
}

const std::string kSampleRecord = "7,0,3,[1,2],[0:[0:[0-1]];1:[3:[1]]]$";

}  // namespace

TEST_CASE("gradients match central finite differences") {
    const GradCheckResult result = grad_check(1e-4, 42);
    CHECK(result.max_rel_error < 1e-4);
}

TEST_CASE("central-difference truncation error scales quadratically") {
    const double err_h = grad_check(1e-2, 42).l1_deviation;
    const double err_2h = grad_check(2e-2, 42).l1_deviation;
    const double ratio = err_2h / err_h;
    CHECK(ratio > 2.5);
    CHECK(ratio < 6.5);
}

TEST_CASE("zeroed output embedding gives a uniform softmax and ln(21) loss") {
    Model model(ModelConfig::custom(8, 1, 16, 16, 3));
    // The output projection is tied to the token embedding; zeroing the
    // embedding zeroes every logit.
    std::fill(model.params().begin(),
              model.params().begin() + vocab::kSize * 8, 0.0f);
    const std::vector<TokenId> window = tokenize("2,0,1,[1]$");
    const auto [loss, counted] = model.loss_and_grad(window.data(), window.size(), nullptr);
    REQUIRE(counted == window.size() - 1);
    const double mean = loss / static_cast<double>(counted);
    CHECK(mean == doctest::Approx(std::log(21.0)).epsilon(1e-6));
}

TEST_CASE("softmax rows sum to one") {
    Model model(ModelConfig::custom(8, 2, 16, 8, 5));
    const std::vector<TokenId> ids = tokenize("2,0,1$");
    const auto logits = model.forward(ids);
    const std::size_t v = vocab::kSize;
    for (std::size_t t = 0; t < ids.size(); ++t) {
        double max_z = logits[t * v];
        for (std::size_t w = 1; w < v; ++w) {
            max_z = std::max(max_z, static_cast<double>(logits[t * v + w]));
        }
        double denom = 0.0;
        for (std::size_t w = 0; w < v; ++w) {
            denom += std::exp(static_cast<double>(logits[t * v + w]) - max_z);
        }
        double total = 0.0;
        for (std::size_t w = 0; w < v; ++w) {
            total += std::exp(static_cast<double>(logits[t * v + w]) - max_z) / denom;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("logits are causal") {
    Model model(ModelConfig::custom(16, 2, 32, 12, 9));
    std::vector<TokenId> ids = tokenize("2,0,1,[1,3]$");
    const auto base = model.forward(ids);
    // Perturb the final token; logits at earlier positions must not move.
    ids.back() = 0;
    const auto perturbed = model.forward(ids);
    const std::size_t v = vocab::kSize;
    for (std::size_t t = 0; t + 1 < ids.size(); ++t) {
        for (std::size_t w = 0; w < v; ++w) {
            CHECK(base[t * v + w] == perturbed[t * v + w]);
        }
    }
}

TEST_CASE("single position forward has the right shape") {
    Model model(ModelConfig::custom(8, 1, 16, 4, 1));
    const auto logits = model.forward({vocab::kBos});
    CHECK(logits.size() == static_cast<std::size_t>(vocab::kSize));
}

TEST_CASE("identical seeds give bit-identical models") {
    const ModelConfig cfg = ModelConfig::for_capacity(Capacity::C1, 24, 7);
    Model a(cfg), b(cfg);
    CHECK(a.params() == b.params());
}

TEST_CASE("invalid head divisibility is rejected") {
    CHECK_THROWS_AS(ModelConfig::custom(30, 4, 64, 16, 0), Error);
}

TEST_CASE("parameter counts stay within ten percent of the capacity budgets") {
    // Reference context length 23.
    for (int c = 0; c < 6; ++c) {
        const Capacity cap = static_cast<Capacity>(c);
        const ModelConfig cfg = ModelConfig::for_capacity(cap, 23, 0);
        const double count = static_cast<double>(cfg.param_count());
        const double reference = 1000.0 * capacity_row(cap).reference_params_k;
        CHECK(count > 0.9 * reference);
        CHECK(count < 1.1 * reference);
    }
}

TEST_CASE("training memorizes a single repeated record") {
    const SegmentedCorpus corpus = repeated_record_corpus(64, kSampleRecord);
    Model model(ModelConfig::for_capacity(Capacity::C1, static_cast<int>(corpus.L), 11));
    TrainOptions options;
    options.max_epochs = 5;
    options.batch_size = 1;
    options.learning_rate = 3e-3;
    options.early_stop_delta = -1e30;  // run all five epochs
    const TrainReport report = train(model, corpus, options);
    REQUIRE(!report.epoch_losses.empty());
    for (double loss : report.epoch_losses) CHECK(std::isfinite(loss));
    CHECK(report.epoch_losses.back() < 0.1);

    // Generation from the record head completes the memorized record.
    const auto head = tokenize("7,");
    const GenerateResult gen = model.generate(head, kSampleRecord.size() + 1, vocab::kEos);
    CHECK(detokenize(gen.ids) == kSampleRecord);
    CHECK_FALSE(gen.truncated);

    // Generation is a pure function of (state, head).
    const GenerateResult again = model.generate(head, kSampleRecord.size() + 1, vocab::kEos);
    CHECK(gen.ids == again.ids);
}

TEST_CASE("training is deterministic for identical seeds") {
    const SegmentedCorpus corpus = repeated_record_corpus(16, kSampleRecord);
    TrainOptions options;
    options.max_epochs = 2;
    options.batch_size = 4;
    Model a(ModelConfig::for_capacity(Capacity::C1, static_cast<int>(corpus.L), 21));
    Model b(ModelConfig::for_capacity(Capacity::C1, static_cast<int>(corpus.L), 21));
    const TrainReport ra = train(a, corpus, options);
    const TrainReport rb = train(b, corpus, options);
    CHECK(ra.epoch_losses == rb.epoch_losses);
    CHECK(a.params() == b.params());
}

namespace {

// Doctored model that deterministically argmaxes the terminator: every
// parameter is zero except a shared first component in the positional rows
// and the terminator's embedding row. The residual stream then equals the
// positional vector, and only the terminator logit is positive.
Model always_terminates_model() {
    Model model(ModelConfig::custom(8, 1, 16, 10, 2));
    std::fill(model.params().begin(), model.params().end(), 0.0f);
    const std::size_t d = 8;
    model.params()[static_cast<std::size_t>(vocab::kEos) * d] = 1.0f;  // token embedding row
    const std::size_t pos_base = static_cast<std::size_t>(vocab::kSize) * d;
    for (int t = 0; t < 10; ++t) {
        model.params()[pos_base + static_cast<std::size_t>(t) * d] = 1.0f;
    }
    return model;
}

}  // namespace

TEST_CASE("terminator as the first prediction returns head plus terminator") {
    const Model model = always_terminates_model();
    const auto head = tokenize("4,");
    const GenerateResult gen = model.generate(head, 50, vocab::kEos);
    REQUIRE(gen.ids.size() == head.size() + 1);
    CHECK(gen.ids.back() == vocab::kEos);
    CHECK_FALSE(gen.truncated);
}

TEST_CASE("generation truncates at max_len with the flag set") {
    // Same doctored model, but the caller waits for a token it never emits.
    const Model model = always_terminates_model();
    const GenerateResult gen = model.generate(tokenize("4,"), 6, vocab::kRsv);
    CHECK(gen.ids.size() == 6);
    CHECK(gen.truncated);
}

TEST_CASE("context overflow is reported") {
    Model model(ModelConfig::custom(8, 1, 16, 4, 2));
    try {
        model.forward(tokenize("2,0,1,[1]$"));
        FAIL("expected ContextOverflow");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::ContextOverflow);
    }
}

TEST_CASE("checkpoint round trip preserves exact bits") {
    const SegmentedCorpus corpus = repeated_record_corpus(8, kSampleRecord);
    Model model(ModelConfig::for_capacity(Capacity::C1, static_cast<int>(corpus.L), 4));
    TrainOptions options;
    options.max_epochs = 1;
    options.batch_size = 4;
    train(model, corpus, options);

    const std::string path =
        (std::filesystem::temp_directory_path() / "dehy_test_model.ckpt").string();
    save_checkpoint(path, model);
    const Model loaded = load_checkpoint(path);
    CHECK(loaded.config() == model.config());
    CHECK(loaded.params() == model.params());
    std::filesystem::remove(path);
}
