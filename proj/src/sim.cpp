#include "amol/sim.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

#include <Eigen/Eigenvalues>

#include "amol/error.hpp"
#include "amol/rng.hpp"
#include "amol/value.hpp"

namespace amol {

namespace {

constexpr double equicorrelation = 0.2;
constexpr std::size_t correlated_block = 10;

double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Equicorrelated block via a shared factor: X_i = sqrt(rho) Z_0 + sqrt(1 - rho) Z_i.
std::vector<double> draw_features(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> normal;
    const double shared = normal(rng);
    std::vector<double> x(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        const double z = normal(rng);
        x[i] = i < correlated_block
                   ? std::sqrt(equicorrelation) * shared + std::sqrt(1.0 - equicorrelation) * z
                   : z;
    }
    return x;
}

// Appends the stage with its features, picks the action (policy or design coin)
// and records the design propensity of that action.
StageObservation& open_stage(Trajectory& t, std::vector<double> features, double p_treat,
                             double coin, const ActionPolicy* policy, const Latent& latent) {
    t.stages.push_back({std::move(features), 1, 0.0, 0.5, true});
    auto& s = t.stages.back();
    s.action = policy ? (*policy)(t, t.stages.size() - 1, latent) : (coin < p_treat ? 1 : -1);
    if (s.action != 1 && s.action != -1) fail(ErrorCode::invalid_argument, "policy returned a non-binary action");
    s.propensity = s.action == 1 ? p_treat : 1.0 - p_treat;
    return s;
}

}  // namespace

double Setting1Scenario::prob_treat(std::size_t stage, std::span<const double> x, double prior_reward) {
    switch (stage) {
        case 0: return logistic(0.5 * x[0]);
        case 1: return logistic(-0.1 * prior_reward);
        case 2: return logistic(-0.2 * x[2]);
        case 3: return logistic(-0.2 * x[3]);
    }
    fail(ErrorCode::invalid_argument, "setting 1 has four stages");
}

std::vector<Trajectory> Setting1Scenario::sample(std::size_t n, std::uint64_t seed,
                                                 const ActionPolicy* policy,
                                                 std::vector<Latent>* latents) const {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Trajectory> out(n);
    if (latents) latents->assign(n, Latent{});
    const Latent none{};
    for (auto& t : out) {
        const auto x = draw_features(rng, num_features);
        std::array<double, 4> eps{}, coin{};
        for (auto& e : eps) e = noise_scale_ * normal(rng);
        for (auto& c : coin) c = unif(rng);

        auto& s1 = open_stage(t, x, prob_treat(0, x, 0.0), coin[0], policy, none);
        s1.reward = x[0] * s1.action + eps[0];
        const double r1 = s1.reward;

        auto& s2 = open_stage(t, {}, prob_treat(1, x, r1), coin[1], policy, none);
        s2.reward = (r1 + x[1] * x[1] + x[2] * x[2] - 0.8) * s2.action + eps[1];
        const double r2 = s2.reward;

        auto& s3 = open_stage(t, {}, prob_treat(2, x, r2), coin[2], policy, none);
        s3.reward = r3_gain_ * (r2 + x[3]) * s3.action + x[4] * x[4] + x[5] + eps[2];
        const double r3 = s3.reward;

        auto& s4 = open_stage(t, {}, prob_treat(3, x, r3), coin[3], policy, none);
        s4.reward = (r3 - 0.5) * s4.action + eps[3];
    }
    return out;
}

Setting2Scenario::Setting2Scenario(std::uint64_t seed, GroupMeans mode, double noise_scale)
    : noise_scale_(noise_scale) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(5.0));
    for (auto& row : means_) {
        if (mode == GroupMeans::shared)
            row.fill(normal(rng));
        else
            for (auto& m : row) m = normal(rng);
    }
}

int setting2_optimal_action(int group, int stage_one_based) {
    require(group >= 1 && group <= Setting2Scenario::num_groups, ErrorCode::invalid_argument,
            "latent group must be in 1..10");
    require(stage_one_based >= 1 && stage_one_based <= 4, ErrorCode::invalid_argument,
            "stage must be in 1..4");
    return 2 * ((group >> (stage_one_based - 1)) & 1) - 1;
}

std::vector<Trajectory> Setting2Scenario::sample(std::size_t n, std::uint64_t seed,
                                                 const ActionPolicy* policy,
                                                 std::vector<Latent>* latents) const {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_int_distribution<int> group_dist(1, num_groups);
    std::vector<Trajectory> out(n);
    if (latents) latents->assign(n, Latent{});
    for (std::size_t i = 0; i < n; ++i) {
        auto& t = out[i];
        const Latent latent{group_dist(rng)};
        if (latents) (*latents)[i] = latent;
        auto x = draw_features(rng, num_features);
        const auto& mu = means_[static_cast<std::size_t>(latent.group - 1)];
        for (std::size_t d = 0; d < informative; ++d) x[d] += mu[d];
        const double eps = noise_scale_ * normal(rng);
        std::array<double, 4> coin{};
        for (auto& c : coin) c = unif(rng);

        double matched = 0.0;
        for (std::size_t k = 0; k < 4; ++k) {
            auto& s = open_stage(t, k == 0 ? x : std::vector<double>{}, 0.5, coin[k], policy, latent);
            matched += s.action * setting2_optimal_action(latent.group, static_cast<int>(k + 1));
        }
        t.stages[3].reward = matched + eps;
    }
    return out;
}

std::vector<Trajectory> gen_setting1(std::size_t n, std::uint64_t seed) {
    return Setting1Scenario{}.sample(n, derive_seed(seed, {stream::data}));
}

std::vector<Trajectory> gen_setting2(std::size_t n, std::uint64_t seed) {
    const Setting2Scenario scenario(derive_seed(seed, {stream::scenario}));
    return scenario.sample(n, derive_seed(seed, {stream::data}));
}

namespace {

// Nodes and weights for E[f(Z)], Z ~ N(0, 1) (Golub-Welsch on the
// probabilists' Hermite recurrence).
struct NormalQuadrature {
    std::vector<double> nodes, weights;

    explicit NormalQuadrature(std::size_t m) {
        Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        for (Eigen::Index k = 1; k < static_cast<Eigen::Index>(m); ++k)
            jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(m); ++i) {
            nodes.push_back(eig.eigenvalues()[i]);
            weights.push_back(eig.eigenvectors()(0, i) * eig.eigenvectors()(0, i));
        }
    }
};

// E|mu + sigma Z|.
double mean_abs_normal(double mu, double sigma) {
    if (sigma <= 0.0) return std::abs(mu);
    const double z = mu / sigma;
    constexpr double inv_sqrt_2pi = 0.3989422804014327;
    return mu * std::erf(z / std::sqrt(2.0)) + 2.0 * sigma * inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

struct Setting1Dp {
    double gain, sigma;
    NormalQuadrature quad{24};

    // Expected R3 + R4 after choosing a3, with A4 optimal.
    double stage3(double r2, std::span<const double> x, int a3) const {
        const double m = gain * (r2 + x[3]) * a3 + x[4] * x[4] + x[5];
        return m + mean_abs_normal(m - 0.5, sigma);
    }
    double value3(double r2, std::span<const double> x) const {
        return std::max(stage3(r2, x, 1), stage3(r2, x, -1));
    }
    double stage2(double r1, std::span<const double> x, int a2) const {
        const double b = (r1 + x[1] * x[1] + x[2] * x[2] - 0.8) * a2;
        double v = b;
        for (std::size_t q = 0; q < quad.nodes.size(); ++q)
            v += quad.weights[q] * value3(b + sigma * quad.nodes[q], x);
        return v;
    }
    double value2(double r1, std::span<const double> x) const {
        return std::max(stage2(r1, x, 1), stage2(r1, x, -1));
    }
    double stage1(std::span<const double> x, int a1) const {
        const double b = x[0] * a1;
        double v = b;
        for (std::size_t q = 0; q < quad.nodes.size(); ++q)
            v += quad.weights[q] * value2(b + sigma * quad.nodes[q], x);
        return v;
    }
};

int argmax_action(double plus, double minus) { return plus >= minus ? 1 : -1; }

}  // namespace

ActionPolicy Setting1Scenario::oracle_policy() const {
    auto dp = std::make_shared<const Setting1Dp>(Setting1Dp{r3_gain_, noise_scale_});
    return [dp](const Trajectory& t, std::size_t stage, const Latent&) {
        const auto& x = t.stages[0].features;
        switch (stage) {
            case 0: return argmax_action(dp->stage1(x, 1), dp->stage1(x, -1));
            case 1: {
                const double r1 = t.stages[0].reward;
                return argmax_action(dp->stage2(r1, x, 1), dp->stage2(r1, x, -1));
            }
            case 2: {
                const double r2 = t.stages[1].reward;
                return argmax_action(dp->stage3(r2, x, 1), dp->stage3(r2, x, -1));
            }
            default: return sign_of(t.stages[2].reward - 0.5);
        }
    };
}

ActionPolicy setting1_greedy_policy() {
    return [](const Trajectory& t, std::size_t stage, const Latent&) {
        const auto& x = t.stages[0].features;
        switch (stage) {
            case 0: return sign_of(x[0]);
            case 1: return sign_of(t.stages[0].reward + x[1] * x[1] + x[2] * x[2] - 0.8);
            case 2: return sign_of(t.stages[1].reward + x[3]);
            default: return sign_of(t.stages[2].reward - 0.5);
        }
    };
}

ActionPolicy setting2_oracle_policy() {
    return [](const Trajectory&, std::size_t stage, const Latent& latent) {
        return setting2_optimal_action(latent.group, static_cast<int>(stage + 1));
    };
}

std::unique_ptr<Scenario> make_scenario(Setting setting, std::uint64_t seed) {
    if (setting == Setting::one) return std::make_unique<Setting1Scenario>();
    return std::make_unique<Setting2Scenario>(seed);
}

// ---------------------------------------------------------------------------

namespace {

void summarize(MethodSummary& m) {
    std::vector<double> ok;
    for (double v : m.values)
        if (!std::isnan(v)) ok.push_back(v);
    m.failures = m.values.size() - ok.size();
    if (ok.empty()) {
        m.mean = m.std = m.median = std::numeric_limits<double>::quiet_NaN();
        return;
    }
    std::sort(ok.begin(), ok.end());
    double sum = 0.0;
    for (double v : ok) sum += v;
    m.mean = sum / static_cast<double>(ok.size());
    double ss = 0.0;
    for (double v : ok) ss += (v - m.mean) * (v - m.mean);
    m.std = ok.size() > 1 ? std::sqrt(ss / static_cast<double>(ok.size() - 1)) : 0.0;
    const std::size_t h = ok.size() / 2;
    m.median = ok.size() % 2 ? ok[h] : 0.5 * (ok[h - 1] + ok[h]);
}

}  // namespace

BenchmarkReport run_benchmark(const ScenarioSpec& spec, std::span<const Method> methods,
                              const LearnerConfig& config, std::size_t threads) {
    require(spec.n_train >= 1 && spec.n_test >= 1 && spec.replicates >= 1,
            ErrorCode::invalid_argument, "scenario counts must be positive");
    require(!methods.empty(), ErrorCode::invalid_argument, "no methods to benchmark");
    const auto start = std::chrono::steady_clock::now();

    BenchmarkReport report;
    report.spec = spec;
    for (Method m : methods)
        report.methods.push_back({m, std::vector<double>(spec.replicates, std::numeric_limits<double>::quiet_NaN())});

    auto run_replicate = [&](std::size_t r) {
        const std::uint64_t rep_seed = derive_seed(spec.seed, {stream::replicate, r});
        const auto scenario = make_scenario(spec.setting, derive_seed(rep_seed, {stream::scenario}));
        const auto train = scenario->sample(spec.n_train, derive_seed(rep_seed, {stream::data}));
        LearnerConfig cfg = config;
        cfg.seed = derive_seed(rep_seed, {stream::folds});
        for (std::size_t m = 0; m < methods.size(); ++m) {
            try {
                const FitReport fitted = fit(methods[m], train, cfg);
                report.methods[m].values[r] = true_value_mc(fitted.regimen, *scenario, spec.n_test,
                                                            derive_seed(rep_seed, {stream::test}));
            } catch (const Error&) {
                // recorded as NaN and counted as a failure
            }
        }
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, spec.replicates);
    if (threads <= 1) {
        for (std::size_t r = 0; r < spec.replicates; ++r) run_replicate(r);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < threads; ++w)
            pool.emplace_back([&] {
                for (std::size_t r = next++; r < spec.replicates; r = next++) run_replicate(r);
            });
    }

    for (auto& m : report.methods) summarize(m);
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

}  // namespace amol
