#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "flowplan/errors.hpp"
#include "flowplan/flow.hpp"
#include "test_support.hpp"

using namespace flowplan;
using namespace flowplan::testing;

namespace {

void force_output_bias(CouplingBlock& block, CouplingBlock::Net net, double value) {
    auto p = block.net_params(net);
    std::fill(p.begin() + static_cast<std::ptrdiff_t>(block.net_layout(net).output_layer_offset()), p.end(), 0.0);
    p.back() = value;
}

RowVector point_context(const Config& init, const Config& target) {
    WorkspaceEncoding enc;
    enc.points.assign(2 * kEncodingPoints, kEncodingSentinel);
    enc.mask.assign(kEncodingPoints, 0);
    enc.points[0] = 0.4;
    enc.points[1] = 0.6;
    enc.mask[0] = 1;
    return context_vector({enc, init, target}, init.size());
}

}  // namespace

TEST(Flow, ContextLayoutUsesSentinelAndMaskBits) {
    WorkspaceEncoding enc;
    enc.points.assign(2 * kEncodingPoints, 0.25);
    enc.mask.assign(kEncodingPoints, 1);
    const RowVector full = context_vector({enc, Config{0.1, 0.2}, Config{0.3, 0.4}}, 2);
    ASSERT_EQ(full.size(), static_cast<Eigen::Index>(context_dim(2)));
    EXPECT_EQ(context_dim(2), 134u);
    EXPECT_EQ(full[128], 0.1);
    EXPECT_EQ(full[130], 1.0);
    EXPECT_EQ(full[131], 0.3);
    EXPECT_EQ(full[133], 1.0);
    const RowVector none = context_vector({enc, std::nullopt, std::nullopt}, 2);
    EXPECT_EQ(none[128], -1.0);
    EXPECT_EQ(none[129], -1.0);
    EXPECT_EQ(none[130], 0.0);
    EXPECT_EQ(none[133], 0.0);
    EXPECT_THROW(context_vector({enc, Config{0.1}, std::nullopt}, 2), std::invalid_argument);
}

TEST(Flow, IdentityBlockAtInit) {
    const FlowModel m(small_layout(3, 2), 1);
    const std::vector<double> z{0.3, -1.2, 4.0}, ctx{0.5, 0.5};
    const auto [out, ld] = coupling_forward(m.blocks()[0], z, ctx);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(out[i], z[static_cast<std::size_t>(i)]);
    EXPECT_EQ(ld, 0.0);
}

TEST(Flow, CouplingHandExample) {
    CouplingBlock block(2, 1, 0, {4}, 2.0);
    Rng rng(1);
    block.initialize(rng);
    // Output layers emit only their bias; the scale bias is chosen so the clamped value is ln 2.
    force_output_bias(block, CouplingBlock::kScaleA, 2.0 * std::atanh(std::numbers::ln2 / 2.0));
    force_output_bias(block, CouplingBlock::kShiftA, 0.5);
    force_output_bias(block, CouplingBlock::kScaleB, 0.0);
    force_output_bias(block, CouplingBlock::kShiftB, -1.0);
    const std::vector<double> z{1.0, 2.0};
    const auto [out, ld] = coupling_forward(block, z, {});
    EXPECT_NEAR(out[0], 2.5, 1e-12);
    EXPECT_NEAR(out[1], 1.0, 1e-12);
    EXPECT_NEAR(ld, 0.6931, 1e-4);
    EXPECT_NEAR(ld, std::numbers::ln2, 1e-12);

    const std::vector<double> back{out[0], out[1]};
    const auto [in, ild] = coupling_inverse(block, back, {});
    EXPECT_NEAR(in[0], 1.0, 1e-12);
    EXPECT_NEAR(in[1], 2.0, 1e-12);
    EXPECT_NEAR(ild, -std::numbers::ln2, 1e-12);
}

TEST(Flow, IdentityLogProbHandValue) {
    const FlowModel m(FlowLayout::for_robot(RobotKind::Point2), 3);
    const RowVector ctx = point_context(Config{0.1, 0.1}, Config{0.9, 0.9});
    const double expected = -std::log(2.0 * std::numbers::pi) + 2.0 * std::log(4.0);
    EXPECT_NEAR(m.log_prob(Config{0.5, 0.5}, ctx), expected, 1e-12);
    EXPECT_NEAR(expected, 0.93471, 1e-5);
}

TEST(Flow, RoundTripOnRandomModels) {
    Rng rng(11);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int dim = trial % 2 ? 4 : 3;
        const FlowModel m = random_model(small_layout(dim, 5, {16, 16}, 4), 100 + trial);
        Matrix x(50, dim), ctx(50, 5);
        for (auto& v : x.reshaped()) v = rng.uniform(-4, 4);
        for (auto& v : ctx.reshaped()) v = rng.uniform(-1, 1);
        const FlowPass f = m.forward(x, ctx);
        const FlowPass b = m.inverse(f.out, ctx);
        worst = std::max(worst, (b.out - x).cwiseAbs().maxCoeff());
        EXPECT_LT((f.logdet + b.logdet).cwiseAbs().maxCoeff(), 1e-9);
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(Flow, AnalyticLogdetMatchesFiniteDifferences) {
    Rng rng(12);
    for (int dim : {2, 4}) {
        const int cdim = static_cast<int>(context_dim(static_cast<std::size_t>(dim)));
        const FlowModel m = random_model(small_layout(dim, cdim, {16}, 3), 200 + dim, 0.5);
        for (int i = 0; i < 5; ++i) {
            Config q(static_cast<std::size_t>(dim));
            for (double& c : q) c = rng.uniform(0.05, 0.95);
            RowVector ctx = random_row(static_cast<std::size_t>(cdim), rng);
            ctx.segment(128 + dim + 1, dim).setConstant(-1.0);  // target masked
            ctx[128 + 2 * dim + 1] = 0.0;
            const double a = logdet_analytic(m, q, ctx), n = logdet_numeric_check(m, q, ctx);
            EXPECT_LT(rel_err(a, n), 1e-4) << a << " vs " << n;
        }
    }
}

TEST(Flow, IdentityLogdetIsLogitTermOnly) {
    const FlowModel m(small_layout(2, 3), 1);
    const Config q{0.2, 0.7};
    const RowVector ctx = RowVector::Zero(3);
    const double expected = -std::log(0.2 * 0.8) - std::log(0.7 * 0.3);
    EXPECT_NEAR(logdet_analytic(m, q, ctx), expected, 1e-12);
}

TEST(Flow, SamplesStayInsideUnitCube) {
    const FlowModel m = random_model(small_layout(4, 2, {8}, 2), 5, 3.0);
    const RowVector ctx = RowVector::Constant(2, 0.5);
    const Matrix s = m.sample_matrix(ctx, 5000, 9);
    EXPECT_GT(s.minCoeff(), 0.0);
    EXPECT_LT(s.maxCoeff(), 1.0);
    EXPECT_EQ(s, m.sample_matrix(ctx, 5000, 9));
    EXPECT_NE(s, m.sample_matrix(ctx, 5000, 10));
}

TEST(Flow, ZeroLatentDecodesToCentre) {
    const FlowModel m(small_layout(3, 1), 1);
    const Matrix q = m.decode(Matrix::Zero(1, 3), Matrix::Zero(1, 1));
    for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(q(0, i), 0.5);
}

TEST(Flow, ParameterCountMatchesLayoutFormula) {
    const FlowModel m(FlowLayout::for_robot(RobotKind::Arm4), 1);
    std::size_t expected = 0;
    const auto net = [](int in, int out) { return (in + 1) * 64 + 65 * 64 + 65 * out; };
    // split 2/2, context 138
    expected = 8 * static_cast<std::size_t>(4 * net(2 + 138, 2));
    EXPECT_EQ(m.param_count(), expected);
}

TEST(Flow, SerializationRoundTripIsBitExact) {
    FlowModel m = random_model(FlowLayout::for_robot(RobotKind::Point2), 7, 0.3);
    m.metadata()["note"] = "x";
    const std::string text = flow_to_json(m);
    const FlowModel back = flow_from_json(text);
    EXPECT_EQ(back.parameters(), m.parameters());
    EXPECT_EQ(back.metadata(), m.metadata());
    EXPECT_EQ(flow_to_json(back), text);
    const RowVector ctx = point_context(Config{0.2, 0.3}, Config{0.8, 0.1});
    EXPECT_EQ(back.log_prob(Config{0.3, 0.6}, ctx), m.log_prob(Config{0.3, 0.6}, ctx));
}

TEST(Flow, CorruptCheckpointsAreRejected) {
    const FlowModel m(small_layout(2, 1), 1);
    std::string text = flow_to_json(m);
    EXPECT_THROW(flow_from_json(text.substr(0, text.size() / 2)), FormatError);
    std::string wrong_version = text;
    wrong_version.replace(wrong_version.find("\"version\": 1"), 12, "\"version\": 7");
    try {
        flow_from_json(wrong_version);
        ADD_FAILURE() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
    }
    EXPECT_THROW(load_flow("/nonexistent/flow.json"), IoError);
}
