#include <gtest/gtest.h>

#include "navtl/nn/accounting.hpp"
#include "navtl/nn/network_spec.hpp"

using namespace navtl;
using namespace navtl::nn;

namespace {

// Independent per-layer arithmetic for the reference trunk (227x227x3 input).
std::uint64_t conv_weights(std::uint64_t k, std::uint64_t in_c, std::uint64_t out_c) {
    return k * k * in_c * out_c + out_c;
}
std::uint64_t dense_weights(std::uint64_t in, std::uint64_t out) { return (in + 1) * out; }

}  // namespace

TEST(ReferenceNetwork, ConvWeightSumMatchesPerLayerCount) {
    const std::uint64_t expected = conv_weights(11, 3, 96) + conv_weights(5, 96, 256) + conv_weights(3, 256, 384) +
                                   conv_weights(3, 384, 384) + conv_weights(3, 384, 256);
    EXPECT_EQ(expected, 3'747'200u);
    auto spec = build_reference_network(25);
    auto layout = analyze(spec);
    std::uint64_t conv = 0;
    for (std::size_t i = 0; i < spec.layers.size(); ++i)
        if (spec.layers[i].kind == LayerKind::conv2d) conv += layout.info[i].weight_count;
    EXPECT_EQ(conv, expected);
}

TEST(ReferenceNetwork, GroupSumsReproduceCostTable) {
    // brute-force group arithmetic before trusting the builder
    const std::uint64_t l2 = 2 * dense_weights(1024, 512) + dense_weights(512, 25) + dense_weights(512, 1);
    const std::uint64_t l3 = l2 + 2 * dense_weights(1024, 1024);
    const std::uint64_t l4 = l3 + 2 * dense_weights(2048, 1024);
    const std::uint64_t all = l4 + dense_weights(9216, 4096) + 3'747'200;
    EXPECT_EQ(l2, 1'062'938u);
    EXPECT_EQ(l3, 3'162'138u);
    EXPECT_EQ(l4, 7'358'490u);
    EXPECT_EQ(all, 48'858'522u);

    auto spec = build_reference_network(25);
    EXPECT_EQ(count_trainable_weights(spec, TrainType::e2e()), 48'858'522u);
    EXPECT_EQ(count_trainable_weights(spec, TrainType::last_p(4)), 7'358'490u);
    EXPECT_EQ(count_trainable_weights(spec, TrainType::last_p(3)), 3'162'138u);
    EXPECT_EQ(count_trainable_weights(spec, TrainType::last_p(2)), 1'062'938u);
}

TEST(ReferenceNetwork, ShapesChainToFlatten9216) {
    auto spec = build_reference_network(25);
    auto layout = analyze(spec);
    EXPECT_TRUE(layout.dueling);
    EXPECT_EQ(layout.action_count, 25u);
    for (std::size_t i = 0; i < spec.layers.size(); ++i)
        if (spec.layers[i].name == "flatten") {
            EXPECT_EQ(layout.info[i].out.c, 9216u);
        }
    EXPECT_EQ(layout.max_fc_depth, 5u);
}

TEST(ReferenceNetwork, FcDepthsPairParallelStreams) {
    auto spec = build_reference_network(25);
    auto layout = analyze(spec);
    auto depth = [&](const std::string& n) {
        for (std::size_t i = 0; i < spec.layers.size(); ++i)
            if (spec.layers[i].name == n) return layout.info[i].fc_depth;
        return std::size_t(99);
    };
    EXPECT_EQ(depth("v_head"), 1u);
    EXPECT_EQ(depth("a_head"), 1u);
    EXPECT_EQ(depth("v_fc9"), 2u);
    EXPECT_EQ(depth("a_fc9"), 2u);
    EXPECT_EQ(depth("a_fc8"), 3u);
    EXPECT_EQ(depth("v_fc7"), 4u);
    EXPECT_EQ(depth("fc6"), 5u);
    EXPECT_EQ(depth("conv1"), 0u);
}

TEST(ReferenceNetwork, RejectsZeroActions) { EXPECT_THROW(build_reference_network(0), ConfigError); }

TEST(Accounting, PercentagesTruncateToTwoDecimals) {
    const std::uint64_t total = 48'858'522;
    EXPECT_DOUBLE_EQ(truncated_percent(7'358'490, total), 15.06);
    EXPECT_DOUBLE_EQ(truncated_percent(3'162'138, total), 6.47);
    EXPECT_DOUBLE_EQ(truncated_percent(1'062'938, total), 2.17);
    EXPECT_DOUBLE_EQ(truncated_percent(total, total), 100.0);
}

TEST(Accounting, DenseFlopsEqualWeightsUnderMacConvention) {
    auto spec = build_reference_network(25);
    for (auto tt : {TrainType::last_p(4), TrainType::last_p(3), TrainType::last_p(2)})
        EXPECT_EQ(count_flops(spec, tt).trainable_flops, count_trainable_weights(spec, tt)) << tt.name();
}

TEST(Accounting, ConvFlopsFollowPerLayerFormula) {
    // out_h*out_w*out_c*(k*k*in_c), computed by hand for each AlexNet conv
    const std::uint64_t c1 = 55ull * 55 * 96 * (11 * 11 * 3);
    const std::uint64_t c2 = 27ull * 27 * 256 * (5 * 5 * 96);
    const std::uint64_t c3 = 13ull * 13 * 384 * (3 * 3 * 256);
    const std::uint64_t c4 = 13ull * 13 * 384 * (3 * 3 * 384);
    const std::uint64_t c5 = 13ull * 13 * 256 * (3 * 3 * 384);
    auto report = count_flops(build_reference_network(25), TrainType::e2e());
    EXPECT_EQ(report.conv_flops, c1 + c2 + c3 + c4 + c5);
    EXPECT_EQ(report.conv_flops, 1'076'634'144u);
    EXPECT_EQ(report.total_flops, report.conv_flops + (48'858'522u - 3'747'200u));
    EXPECT_EQ(report.trainable_flops, report.total_flops);
    EXPECT_DOUBLE_EQ(report.ratio(), 1.0);
}

TEST(TrainTypes, MarksOnlyTheLastGroupsTrainable) {
    auto spec = build_reference_network(25);
    apply_train_type(spec, TrainType::last_p(2));
    for (const auto& l : spec.layers) {
        const bool expect = l.name == "v_fc9" || l.name == "a_fc9" || l.name == "v_head" || l.name == "a_head";
        if (l.has_weights()) {
            EXPECT_EQ(l.trainable, expect) << l.name;
        }
    }
    apply_train_type(spec, TrainType::e2e());
    for (const auto& l : spec.layers) EXPECT_TRUE(l.trainable);
}

TEST(TrainTypes, ParsesNames) {
    EXPECT_EQ(TrainType::parse("e2e"), TrainType::e2e());
    EXPECT_EQ(TrainType::parse("last3").last, 3u);
    EXPECT_EQ(TrainType::parse("last4").name(), "last4");
    EXPECT_THROW(TrainType::parse("last"), ConfigError);
    EXPECT_THROW(TrainType::parse("first2"), ConfigError);
    EXPECT_THROW(TrainType::parse("last0"), ConfigError);
}

TEST(DeskNetwork, HasDistinctTrainTypeBudgets) {
    auto spec = build_desk_network(25, {32, 32, 3});
    auto e2e = count_trainable_weights(spec, TrainType::e2e());
    auto l4 = count_trainable_weights(spec, TrainType::last_p(4));
    auto l3 = count_trainable_weights(spec, TrainType::last_p(3));
    auto l2 = count_trainable_weights(spec, TrainType::last_p(2));
    EXPECT_GT(e2e, l4);
    EXPECT_GT(l4, l3);
    EXPECT_GT(l3, l2);
    EXPECT_EQ(l2, 2u * (64 * 32 + 32) + (32 * 25 + 25) + (32 + 1));
}

TEST(SpecValidation, RejectsBrokenChains) {
    NetworkSpec s;
    s.input = {4, 4, 2};
    s.layers = {LayerSpec::flatten("f"), LayerSpec::dense("d", 31, 3)};
    EXPECT_THROW(analyze(s), ShapeError);

    s.layers = {LayerSpec::dense("d", 32, 3)};  // spatial input into dense
    EXPECT_THROW(analyze(s), ShapeError);

    s.layers = {LayerSpec::flatten("f"), LayerSpec::dense("d", 32, 3), LayerSpec::split("s")};
    s.layers.push_back(LayerSpec::dense("v", 1, 1, Stream::value));
    s.layers.push_back(LayerSpec::dense("a", 1, 2, Stream::advantage));
    s.layers.push_back(LayerSpec::aggregate("q"));
    EXPECT_THROW(analyze(s), ShapeError);  // split of odd width 3

    s.layers = {LayerSpec::flatten("f"), LayerSpec::flatten("f")};
    EXPECT_THROW(analyze(s), ShapeError);  // duplicate names
}

TEST(SpecDigest, IgnoresTrainableFlagsButNotShapes) {
    auto a = build_desk_network(25, {32, 32, 3});
    auto b = a;
    apply_train_type(b, TrainType::last_p(2));
    EXPECT_EQ(spec_digest(a), spec_digest(b));
    auto c = build_desk_network(9, {32, 32, 3});
    EXPECT_NE(spec_digest(a), spec_digest(c));
}
