#include "sevo/error.hpp"
#include "sevo/harness.hpp"

#include <doctest.h>

#include <atomic>

using namespace sevo;
using namespace sevo::harness;

namespace {

ConditionResult cell(const std::string& condition, PolicyKind kind, EnvClass env, int successes,
                     std::uint64_t seed = 1) {
    ConditionResult r;
    r.condition = condition;
    for (const auto& [name, flags] : ablation_conditions()) {
        if (name == condition) r.flags = flags;
    }
    r.policy = kind;
    r.env = env;
    r.trials = 100;
    r.successes = successes;
    r.seed = seed;
    return r;
}

HarnessConfig quiet_noiseless() {
    HarnessConfig cfg;
    cfg.noise = {};
    cfg.jobs = 1;
    return cfg;
}

} // namespace

TEST_CASE("component ranking") {
    auto r = rank_by_drops(21, 6, 3);
    CHECK(r.order == std::vector<Component>{Component::varied_bg, Component::red_light, Component::overlay});
    CHECK_FALSE(r.tie);
    r = rank_by_drops(2, 9, 5);
    CHECK(r.order == std::vector<Component>{Component::red_light, Component::overlay, Component::varied_bg});
    r = rank_by_drops(4, 4, 1);
    CHECK(r.tie);
    CHECK(r.order.front() == Component::varied_bg);
    r = rank_by_drops(0, 0, 0);
    CHECK(r.tie);
    CHECK(r.order == std::vector<Component>{Component::varied_bg, Component::red_light, Component::overlay});
}

TEST_CASE("ranking from a table uses the non-extreme environments") {
    ResultTable t;
    const std::vector<std::pair<std::string, int>> rows{
        {"full", 80}, {"no_varied_bg", 50}, {"no_red_light", 70}, {"no_overlay", 75}};
    for (const auto& [name, s] : rows) {
        t.push_back(cell(name, PolicyKind::trainable_encoder, EnvClass::train, s));
        t.push_back(cell(name, PolicyKind::trainable_encoder, EnvClass::novel_similar, s));
        t.push_back(cell(name, PolicyKind::trainable_encoder, EnvClass::novel_extreme, 0));
    }
    const auto r = rank_components(t);
    CHECK(r.order.front() == Component::varied_bg);
    CHECK(r.drops.at(Component::varied_bg) == doctest::Approx(30.0 / 90.0));
    CHECK_THROWS_AS(rank_components({t[0]}), InvalidArgument);
    CHECK_THROWS_AS(rank_components(t, PolicyKind::frozen_encoder), InvalidArgument);
}

TEST_CASE("success rates exclude null trials") {
    auto r = cell("full", PolicyKind::trainable_encoder, EnvClass::train, 45);
    CHECK(r.null_trials() == 10);
    CHECK(r.bottle_trials() == 90);
    CHECK(r.success_rate() == doctest::Approx(0.5));
    CHECK(is_null_trial(9));
    CHECK_FALSE(is_null_trial(10));
    ProtocolFlags no_null;
    no_null.null_episodes = false;
    CHECK_FALSE(is_null_episode(no_null, 9));
    CHECK(is_null_episode(ProtocolFlags::full(), 19));
}

TEST_CASE("report CSV round-trip") {
    ResultTable t{cell("full", PolicyKind::trainable_encoder, EnvClass::train, 80, 7),
                  cell("baseline", PolicyKind::frozen_encoder, EnvClass::novel_extreme, 0, 9)};
    t[1].false_triggers = 3;
    const auto text = to_csv(t);
    CHECK(text.rfind("condition,policy,env,", 0) == 0);
    CHECK(parse_csv(text) == t);
    CHECK_THROWS_AS(parse_csv("nope\n"), FormatError);
    CHECK_THROWS_AS(parse_csv(text + "full,trainable_encoder,train,1,1\n"), FormatError);
}

TEST_CASE("medians and calibration") {
    ResultTable t;
    for (int s : {20, 40, 60}) t.push_back(cell("baseline", PolicyKind::trainable_encoder, EnvClass::train, s));
    t.push_back(cell("baseline", PolicyKind::trainable_encoder, EnvClass::novel_similar, 0));
    CHECK(median_success(t, [](const ConditionResult& r) { return r.env == EnvClass::train; }) ==
          doctest::Approx(40.0 / 90.0));
    CHECK_NOTHROW(check_calibration(t));

    ResultTable weak{cell("baseline", PolicyKind::trainable_encoder, EnvClass::train, 5)};
    CHECK_THROWS_AS(check_calibration(weak), CalibrationError);
    ResultTable strong{cell("baseline", PolicyKind::trainable_encoder, EnvClass::train, 89)};
    CHECK_THROWS_AS(check_calibration(strong), CalibrationError);
    CHECK_THROWS_AS(check_calibration({}), Error);
}

TEST_CASE("parallel_for") {
    std::atomic<int> sum{0};
    parallel_for(100, 4, [&](int i) { sum += i; });
    CHECK(sum == 4950);
    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [](int i) {
                                     if (i == 6) throw InvalidArgument("six");
                                 }),
                    InvalidArgument);
}

TEST_CASE("ablation rows") {
    const auto rows = ablation_conditions();
    CHECK(rows.size() == 7);
    CHECK(rows.front().first == "full");
    CHECK(rows.front().second == ProtocolFlags::full());
}

TEST_CASE("closed-loop evaluation") {
    const auto cfg = quiet_noiseless();
    const auto oracle = evaluate_controller(oracle_controller(), 1, ProtocolFlags::full(), EnvClass::train, 30, 3, cfg);
    CHECK(oracle.successes == oracle.bottle_trials());
    CHECK(oracle.false_triggers == 0);

    Rng rng(1);
    auto zero = init_policy(PolicyKind::trainable_encoder, rng);
    for (auto& t : zero.tensors) std::fill(t.values.begin(), t.values.end(), 0.0f);
    const auto idle = evaluate_controller(policy_controller(zero), zero.chunk_len, ProtocolFlags::full(),
                                          EnvClass::train, 20, 3, cfg);
    CHECK(idle.successes == 0);
    CHECK(idle.false_triggers == 0);

    // Same seed, same scenes.
    const auto again = evaluate_controller(oracle_controller(), 1, ProtocolFlags::full(), EnvClass::train, 30, 3, cfg);
    CHECK(again == oracle);
}

TEST_CASE("sample collection is deterministic and nested") {
    HarnessConfig cfg;
    cfg.jobs = 1;
    const auto a = collect_samples(ProtocolFlags::full(), 4, 11, cfg);
    const auto b = collect_samples(ProtocolFlags::full(), 4, 11, cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].input == b[i].input);
        REQUIRE(a[i].target == b[i].target);
    }
    const auto more = collect_samples(ProtocolFlags::full(), 6, 11, cfg);
    REQUIRE(more.size() >= a.size());
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(more[i].input == a[i].input);

    const auto ds = build_dataset(ProtocolFlags::full(), 20, 11, cfg);
    CHECK(ds.size() == 20);
    int nulls = 0;
    for (const auto& ep : ds) nulls += ep.meta.scene.is_null() ? 1 : 0;
    CHECK(nulls == 2);
}

TEST_CASE("policy cache trains each cell once") {
    HarnessConfig cfg;
    cfg.jobs = 1;
    cfg.train.steps = 5;
    PolicyCache cache(cfg);
    const PolicyRequest t{ProtocolFlags::full(), PolicyKind::trainable_encoder, 3, 2};
    PolicyRequest f = t;
    f.kind = PolicyKind::frozen_encoder;
    cache.prepare({t, f, t});
    CHECK(cache.size() == 2);
    const auto* first = &cache.get(t);
    CHECK(&cache.get(t) == first);
    CHECK(cache.get(f).kind == PolicyKind::frozen_encoder);
    CHECK(cache.size() == 2);
}
