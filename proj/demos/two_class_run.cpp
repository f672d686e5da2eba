// Minimal library walkthrough: distill a 2D point toward one class of a
// two-class mixture with the balanced combiner, printing a few step records
// and the final densities.

#include <cstdio>

#include "distill/distill.hpp"

int main() {
    using namespace distill;

    const GmmOracle oracle = make_preset("two-class-2d");
    const NoiseSchedule sched = build_schedule(1000, ScheduleFamily::ScaledLinear);
    const WeightRule weight{WeightKind::AlphaSquared};
    const Combiner combiner = Combiner::bsd(25.0);
    const Label label = Label::cls(1);

    DirectGenerator gen(std::vector<double>{2.5, 3.0});
    Optimizer opt(OptimizerConfig{OptimizerKind::Sgd, 0.008}, gen.param_count());
    TimestepSampler sampler(20, 550, derive_stream(7, 1));
    Rng noise(derive_stream(7, 2));

    for (int k = 1; k <= 2000; ++k) {
        const StepRecord rec =
            distill_step(gen, opt, oracle, sched, weight, combiner, label, sampler, noise, k);
        if (k % 250 == 0) {
            std::printf("step %4d  t=%3d  alpha=%.3f  log p(x|y)=%8.4f  log p(x)=%8.4f\n",
                        rec.step, rec.t, rec.alpha_mgda.value_or(-1.0), rec.log_px_given_y,
                        rec.log_px);
        }
    }

    const std::vector<double> x = gen.render().image;
    std::printf("final sample: (%.4f, %.4f)\n", x[0], x[1]);
    std::printf("final log p(x)   = %.6f\n",
                log_density_t(oracle, sched, x, 0, Label::null()));
    std::printf("final log p(y|x) = %.6g\n", log_posterior_t(oracle, sched, x, 0, label));
    return 0;
}
