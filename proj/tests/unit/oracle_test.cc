#include "distill/oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "distill/presets.hpp"
#include "distill/rng.hpp"
#include "distill/schedule.hpp"
#include "distill/vec.hpp"

namespace distill {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

NoiseSchedule tiny_schedule() {
    NoiseSchedule s;
    s.T = 2;
    s.alpha = {1.0, 0.6, 0.01};
    s.sigma = {0.0, 0.8, std::sqrt(1.0 - 0.01 * 0.01)};
    s.validate();
    return s;
}

double log_normal_pdf(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * (d * d / var + kLog2Pi + std::log(var));
}

TEST(OracleTest, LabelContract) {
    EXPECT_TRUE(Label::null().is_null());
    EXPECT_FALSE(Label::cls(3).is_null());
    EXPECT_EQ(Label::cls(3).index(), 3);
    EXPECT_THROW(Label::cls(-1), std::invalid_argument);
    EXPECT_THROW(Label::null().index(), std::logic_error);
    EXPECT_TRUE(Label::cls(2) == Label::cls(2));
    EXPECT_FALSE(Label::cls(2) == Label::cls(1));
    EXPECT_TRUE(Label::null() == Label::null());
}

TEST(OracleTest, ValidateRejectsMalformedOracles) {
    const GmmOracle good = make_preset("two-class-1d");
    ASSERT_NO_THROW(good.validate());

    GmmOracle o = good;
    o.dim = 0;
    EXPECT_THROW(o.validate(), std::invalid_argument);

    o = good;
    o.classes.clear();
    o.class_prior.clear();
    EXPECT_THROW(o.validate(), std::invalid_argument);

    o = good;
    o.class_prior = {1.0};  // size mismatch
    EXPECT_THROW(o.validate(), std::invalid_argument);

    o = good;
    o.class_prior = {1.2, -0.2};  // negative prior
    EXPECT_THROW(o.validate(), std::invalid_argument);

    o = good;
    o.class_prior = {0.6, 0.6};  // does not sum to 1
    EXPECT_THROW(o.validate(), std::invalid_argument);

    o = good;
    o.class_prior = {0.5, std::numeric_limits<double>::quiet_NaN()};
    EXPECT_THROW(o.validate(), std::invalid_argument);

    o = good;
    o.classes[0].components.clear();
    EXPECT_THROW(o.validate(), std::invalid_argument);

    o = good;
    o.classes[0].components[0].weight = 0.0;
    EXPECT_THROW(o.validate(), std::invalid_argument);

    o = good;
    o.classes[0].components[0].weight = 0.7;  // class weights no longer sum to 1
    EXPECT_THROW(o.validate(), std::invalid_argument);

    o = good;
    o.classes[1].components[0].cov_scale = 0.0;
    EXPECT_THROW(o.validate(), std::invalid_argument);

    o = good;
    o.classes[1].components[0].mean = {1.0, 2.0};  // wrong dimension
    EXPECT_THROW(o.validate(), std::invalid_argument);

    o = good;
    o.classes[1].components[0].mean = {std::numeric_limits<double>::infinity()};
    EXPECT_THROW(o.validate(), std::invalid_argument);
}

TEST(OracleTest, StandardNormalInvariantAtEveryTimestep) {
    // one-class-2d is a standard normal; noising a standard normal with a
    // variance-preserving schedule leaves it standard normal at every t, so
    // the density and score have textbook closed forms independent of t.
    const GmmOracle oracle = make_preset("one-class-2d");
    const NoiseSchedule sched = build_schedule(1000, ScheduleFamily::ScaledLinear);
    const std::vector<std::vector<double>> points = {
        {0.0, 0.0}, {1.0, -2.0}, {-0.3, 0.7}, {3.5, 3.5}};
    for (int t : {0, 1, 57, 400, 980, 1000}) {
        for (const auto& x : points) {
            const double expected = -0.5 * (x[0] * x[0] + x[1] * x[1]) - kLog2Pi;
            EXPECT_NEAR(log_density_t(oracle, sched, x, t, Label::null()), expected, 1e-12);
            EXPECT_NEAR(log_density_t(oracle, sched, x, t, Label::cls(0)), expected, 1e-12);
            const std::vector<double> s = score_t(oracle, sched, x, t, Label::null());
            EXPECT_NEAR(s[0], -x[0], 1e-12);
            EXPECT_NEAR(s[1], -x[1], 1e-12);
        }
    }
}

TEST(OracleTest, DataDensityMatchesHandLogSumExp) {
    const GmmOracle oracle = make_preset("two-class-1d");
    const NoiseSchedule sched = build_schedule(1000, ScheduleFamily::ScaledLinear);
    const double tau2 = 0.35 * 0.35;
    for (double x : {0.3, -1.9, 2.2}) {
        const double l0 = std::log(0.5) + log_normal_pdf(x, -2.0, tau2);
        const double l1 = std::log(0.5) + log_normal_pdf(x, 2.0, tau2);
        const double m = std::max(l0, l1);
        const double expected = m + std::log(std::exp(l0 - m) + std::exp(l1 - m));
        EXPECT_NEAR(log_density_t(oracle, sched, std::vector<double>{x}, 0, Label::null()),
                    expected, 1e-12);
        // Conditional on class 1 the density is the single Gaussian at +2.
        EXPECT_NEAR(log_density_t(oracle, sched, std::vector<double>{x}, 0, Label::cls(1)),
                    log_normal_pdf(x, 2.0, tau2), 1e-12);
    }
}

TEST(OracleTest, NoisedDensityMatchesSimpsonQuadrature) {
    // Independent check of the noised-mixture formula: integrate the exact
    // forward kernel against the data density with Simpson's rule and compare
    // log p_1(x_t) = log \int p_0(x0) N(x_t; 0.6 x0, 0.64) dx0.
    GmmOracle oracle;
    oracle.dim = 1;
    GmmClass cls;
    cls.components.push_back({0.5, {-2.0}, 1.0});
    cls.components.push_back({0.5, {2.0}, 1.0});
    oracle.classes.push_back(cls);
    oracle.class_prior = {1.0};
    oracle.validate();

    const NoiseSchedule sched = tiny_schedule();
    const double alpha = 0.6, sigma2 = 0.64;

    auto integrand = [&](double x0, double xt) {
        const double p0 = 0.5 * std::exp(log_normal_pdf(x0, -2.0, 1.0)) +
                          0.5 * std::exp(log_normal_pdf(x0, 2.0, 1.0));
        return p0 * std::exp(log_normal_pdf(xt, alpha * x0, sigma2));
    };
    const double lo = -14.0, hi = 14.0;
    const int n = 4000;  // even
    const double h = (hi - lo) / n;

    for (double xt : {0.0, 0.5, -1.3, 3.7}) {
        double acc = integrand(lo, xt) + integrand(hi, xt);
        for (int i = 1; i < n; ++i) {
            acc += integrand(lo + i * h, xt) * ((i % 2 == 1) ? 4.0 : 2.0);
        }
        const double quad = std::log(acc * h / 3.0);
        EXPECT_NEAR(log_density_t(oracle, sched, std::vector<double>{xt}, 1, Label::null()),
                    quad, 1e-6)
            << "xt=" << xt;
    }
}

TEST(OracleTest, SingleComponentScoreClosedForm) {
    // For one Gaussian the score is exactly -(x - alpha mu) / (alpha^2 tau^2 + sigma^2).
    const GmmOracle oracle = make_preset("two-class-2d");
    const NoiseSchedule sched = build_schedule(1000, ScheduleFamily::ScaledLinear);
    const int t = 333;
    const double a = sched.alpha_at(t), sg = sched.sigma_at(t);
    const double var = a * a * 0.75 * 0.75 + sg * sg;
    const std::vector<double> x = {1.7, -0.9};
    const std::vector<double> s = score_t(oracle, sched, x, t, Label::cls(1));
    EXPECT_NEAR(s[0], (a * 2.5 - x[0]) / var, 1e-14);
    EXPECT_NEAR(s[1], (a * 0.0 - x[1]) / var, 1e-14);
}

TEST(OracleTest, ScoreMatchesFiniteDifferenceOfLogDensity) {
    const std::vector<std::string> names = {"two-class-2d", "two-moons-gmm", "two-class-1d"};
    const NoiseSchedule linear = build_schedule(1000, ScheduleFamily::ScaledLinear);
    const NoiseSchedule cosine = build_schedule(1000, ScheduleFamily::Cosine);
    const double h = 1e-5;
    Rng rng(20260817);
    int checked = 0;

    for (const std::string& name : names) {
        const GmmOracle oracle = make_preset(name);
        const std::vector<NoiseSchedule> scheds =
            (name == "two-class-2d") ? std::vector<NoiseSchedule>{linear, cosine}
                                     : std::vector<NoiseSchedule>{linear};
        for (const NoiseSchedule& sched : scheds) {
            for (Label label : {Label::null(), Label::cls(0), Label::cls(1)}) {
                for (int t : {1, 40, 400, 980}) {
                    const std::vector<double> x0 = sample_x0(oracle, rng, label);
                    const std::vector<double> eps = rng.normal_vec(oracle.dim);
                    std::vector<double> x = add_noise(sched, x0, t, eps);
                    const std::vector<double> s = score_t(oracle, sched, x, t, label);

                    std::vector<double> fd(x.size());
                    for (std::size_t i = 0; i < x.size(); ++i) {
                        const double keep = x[i];
                        x[i] = keep + h;
                        const double up = log_density_t(oracle, sched, x, t, label);
                        x[i] = keep - h;
                        const double dn = log_density_t(oracle, sched, x, t, label);
                        x[i] = keep;
                        fd[i] = (up - dn) / (2.0 * h);
                    }
                    const double rel = norm(sub(fd, s)) / std::max(norm(s), 1e-9);
                    EXPECT_LT(rel, 1e-5)
                        << name << " t=" << t
                        << " label=" << (label.is_null() ? -1 : label.index());
                    ++checked;
                }
            }
        }
    }
    EXPECT_GE(checked, 48);
}

TEST(OracleTest, SymmetricMixtureScoreVanishesAtMidpoint) {
    const GmmOracle oracle = make_preset("two-class-1d");
    const NoiseSchedule sched = build_schedule(1000, ScheduleFamily::ScaledLinear);
    for (int t : {0, 1, 200, 700, 1000}) {
        const std::vector<double> s =
            score_t(oracle, sched, std::vector<double>{0.0}, t, Label::null());
        EXPECT_LT(std::abs(s[0]), 1e-12) << "t=" << t;
    }
}

TEST(OracleTest, PredictEpsIsMinusSigmaTimesScore) {
    const GmmOracle oracle = make_preset("two-moons-gmm");
    const NoiseSchedule sched = build_schedule(1000, ScheduleFamily::ScaledLinear);
    const std::vector<double> x = {0.4, 0.9};
    for (int t : {1, 123, 1000}) {
        const std::vector<double> s = score_t(oracle, sched, x, t, Label::cls(0));
        const EpsPrediction pred = predict_eps(oracle, sched, x, t, Label::cls(0));
        ASSERT_EQ(pred.eps_hat.size(), s.size());
        EXPECT_EQ(pred.t, t);
        EXPECT_TRUE(pred.label == Label::cls(0));
        const double neg_sigma = -sched.sigma_at(t);
        for (std::size_t i = 0; i < s.size(); ++i) {
            double expected = s[i];
            expected *= neg_sigma;  // mirrors the library's in-place scaling
            EXPECT_EQ(pred.eps_hat[i], expected);
        }
    }
}

TEST(OracleTest, StandardNormalEpsHatEqualsSigmaTimesPoint) {
    const GmmOracle oracle = make_preset("one-class-2d");
    const NoiseSchedule sched = build_schedule(1000, ScheduleFamily::ScaledLinear);
    const std::vector<double> x = {0.8, -1.1};
    for (int t : {1, 250, 990}) {
        const EpsPrediction pred = predict_eps(oracle, sched, x, t, Label::null());
        const double sg = sched.sigma_at(t);
        EXPECT_NEAR(pred.eps_hat[0], sg * x[0], 1e-12);
        EXPECT_NEAR(pred.eps_hat[1], sg * x[1], 1e-12);
    }
}

TEST(OracleTest, PredictEpsMatchesPosteriorMeanMonteCarlo) {
    // eps_hat must equal E[eps | x_t] under the forward process. Estimate the
    // posterior mean by self-normalized importance sampling: draw x0 from the
    // data mixture, weight by the forward kernel at the fixed x_t, and average
    // eps = (x_t - alpha x0) / sigma. Batch the draws to get a standard error.
    const GmmOracle oracle = make_preset("two-class-1d");
    const NoiseSchedule sched = build_schedule(1000, ScheduleFamily::ScaledLinear);
    const int t = 400;
    const double a = sched.alpha_at(t), sg = sched.sigma_at(t);
    const double xt = 0.9;

    const double analytic =
        predict_eps(oracle, sched, std::vector<double>{xt}, t, Label::null()).eps_hat[0];

    Rng rng(99);
    const int batches = 20, per_batch = 50000;
    std::vector<double> estimates;
    for (int b = 0; b < batches; ++b) {
        double wsum = 0.0, esum = 0.0;
        for (int i = 0; i < per_batch; ++i) {
            const double x0 = sample_x0(oracle, rng, Label::null())[0];
            const double eps = (xt - a * x0) / sg;
            const double w = std::exp(-0.5 * eps * eps);
            wsum += w;
            esum += w * eps;
        }
        estimates.push_back(esum / wsum);
    }
    double mean = 0.0;
    for (double e : estimates) mean += e;
    mean /= batches;
    double var = 0.0;
    for (double e : estimates) var += (e - mean) * (e - mean);
    const double se = std::sqrt(var / (batches - 1)) / std::sqrt(static_cast<double>(batches));
    EXPECT_LE(std::abs(analytic - mean), 3.0 * se + 1e-4)
        << "analytic=" << analytic << " mc=" << mean << " se=" << se;
}

TEST(OracleTest, MarginalIsPriorMixtureOfConditionals) {
    const NoiseSchedule sched = build_schedule(1000, ScheduleFamily::ScaledLinear);
    for (const std::string& name : {std::string("two-class-2d"), std::string("grid-9")}) {
        const GmmOracle oracle = make_preset(name);
        for (int t : {1, 300, 900}) {
            for (const std::vector<double>& x :
                 {std::vector<double>{0.2, -0.4}, std::vector<double>{2.0, 1.0},
                  std::vector<double>{-3.0, 2.5}}) {
                std::vector<double> logs(oracle.classes.size());
                double m = -HUGE_VAL;
                for (int y = 0; y < oracle.num_classes(); ++y) {
                    logs[static_cast<std::size_t>(y)] =
                        std::log(oracle.class_prior[static_cast<std::size_t>(y)]) +
                        log_density_t(oracle, sched, x, t, Label::cls(y));
                    m = std::max(m, logs[static_cast<std::size_t>(y)]);
                }
                double acc = 0.0;
                for (double lg : logs) acc += std::exp(lg - m);
                EXPECT_NEAR(log_density_t(oracle, sched, x, t, Label::null()),
                            m + std::log(acc), 1e-10)
                    << name << " t=" << t;
            }
        }
    }
}

TEST(OracleTest, PosteriorIdentityAtModeratePoints) {
    const GmmOracle oracle = make_preset("two-class-2d");
    const NoiseSchedule sched = build_schedule(1000, ScheduleFamily::ScaledLinear);
    const std::vector<double> x = {1.0, 0.5};
    for (int t : {0, 300}) {
        const double log_px = log_density_t(oracle, sched, x, t, Label::null());
        for (int y : {0, 1}) {
            const double identity =
                std::log(oracle.class_prior[static_cast<std::size_t>(y)]) +
                log_density_t(oracle, sched, x, t, Label::cls(y)) - log_px;
            EXPECT_NEAR(log_posterior_t(oracle, sched, x, t, Label::cls(y)), identity, 1e-10);
        }
    }
}

TEST(OracleTest, PosteriorStaysNegativeUnderSaturation) {
    // At x = 3 the +2 class dominates so heavily that the naive identity
    // collapses to exactly 0; the stable route must keep the true tiny
    // negative value (the -log1p of the competing mass).
    const GmmOracle oracle = make_preset("two-class-1d");
    const NoiseSchedule sched = build_schedule(1000, ScheduleFamily::ScaledLinear);
    const std::vector<double> x = {3.0};
    const double lp = log_posterior_t(oracle, sched, x, 0, Label::cls(1));
    EXPECT_LT(lp, 0.0);
    EXPECT_GT(lp, -1e-40);

    // The dominated label agrees with the identity route to ordinary accuracy.
    const double identity = std::log(0.5) + log_density_t(oracle, sched, x, 0, Label::cls(0)) -
                            log_density_t(oracle, sched, x, 0, Label::null());
    EXPECT_NEAR(log_posterior_t(oracle, sched, x, 0, Label::cls(0)), identity, 1e-9);

    // Posterior masses of the two labels sum to 1.
    const double p0 = std::exp(log_posterior_t(oracle, sched, x, 0, Label::cls(0)));
    const double p1 = std::exp(lp);
    EXPECT_NEAR(p0 + p1, 1.0, 1e-12);
}

TEST(OracleTest, SampleX0Statistics) {
    const GmmOracle oracle = make_preset("two-class-1d");
    Rng rng(4242);
    const int n = 20000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = sample_x0(oracle, rng, Label::cls(1))[0];
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    EXPECT_NEAR(mean, 2.0, 0.01);
    EXPECT_NEAR(sd, 0.35, 0.01);
}

TEST(OracleTest, SampleX0RespectsComponentAndPriorWeights) {
    // Background class of two-class-2d splits 50/50 between lobes at x=0 and
    // x=12; a draw's lobe is identified by the midpoint x=6.
    const GmmOracle oracle2d = make_preset("two-class-2d");
    Rng rng(7);
    const int n = 20000;
    int far = 0;
    for (int i = 0; i < n; ++i) {
        if (sample_x0(oracle2d, rng, Label::cls(0))[0] > 6.0) ++far;
    }
    EXPECT_NEAR(static_cast<double>(far) / n, 0.5, 0.02);

    // Unconditional draws from the symmetric 1d preset split 50/50 by sign.
    const GmmOracle oracle1d = make_preset("two-class-1d");
    int pos = 0;
    for (int i = 0; i < n; ++i) {
        if (sample_x0(oracle1d, rng, Label::null())[0] > 0.0) ++pos;
    }
    EXPECT_NEAR(static_cast<double>(pos) / n, 0.5, 0.02);
}

TEST(OracleTest, SampleX0Deterministic) {
    const GmmOracle oracle = make_preset("two-moons-gmm");
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) {
        const std::vector<double> xa = sample_x0(oracle, a, Label::null());
        const std::vector<double> xb = sample_x0(oracle, b, Label::null());
        ASSERT_EQ(xa, xb);
    }
}

TEST(OracleTest, GlobalMeanHandValue) {
    const GmmOracle oracle = make_preset("two-class-2d");
    const std::vector<double> m = oracle.global_mean();
    // 0.92 * (0.5*(0,0) + 0.5*(12,0)) + 0.08 * (2.5,0) = (5.72, 0).
    EXPECT_NEAR(m[0], 5.72, 1e-12);
    EXPECT_NEAR(m[1], 0.0, 1e-12);
}

TEST(OracleTest, ErrorPaths) {
    const GmmOracle oracle = make_preset("two-class-2d");
    const NoiseSchedule sched = build_schedule(1000, ScheduleFamily::ScaledLinear);
    const std::vector<double> ok = {0.0, 0.0};

    EXPECT_THROW(log_density_t(oracle, sched, std::vector<double>{1.0}, 1, Label::null()),
                 std::invalid_argument);
    EXPECT_THROW(log_density_t(oracle, sched,
                               std::vector<double>{std::nan(""), 0.0}, 1, Label::null()),
                 std::invalid_argument);
    EXPECT_THROW(log_density_t(oracle, sched, ok, 1, Label::cls(7)), std::invalid_argument);
    EXPECT_THROW(log_density_t(oracle, sched, ok, -1, Label::null()), std::invalid_argument);
    EXPECT_THROW(log_density_t(oracle, sched, ok, 1001, Label::null()), std::invalid_argument);

    EXPECT_THROW(score_t(oracle, sched, std::vector<double>{1.0}, 1, Label::null()),
                 std::invalid_argument);
    EXPECT_THROW(predict_eps(oracle, sched, ok, 0, Label::null()), std::invalid_argument);
    EXPECT_THROW(log_posterior_t(oracle, sched, ok, 1, Label::null()), std::invalid_argument);

    Rng rng(1);
    EXPECT_THROW(sample_x0(oracle, rng, Label::cls(9)), std::invalid_argument);

    EXPECT_THROW(make_preset("no-such-preset"), std::invalid_argument);
}

}  // namespace
}  // namespace distill
