// Splat-generator demo: distill a 16x16 splat image toward one class of the
// procedural image oracle and export before/after PPM snapshots.

#include <cstdio>

#include "distill/distill.hpp"

int main() {
    using namespace distill;

    const GmmOracle oracle = make_preset("blob-16");
    const NoiseSchedule sched = build_schedule(1000, ScheduleFamily::ScaledLinear);
    const WeightRule weight{WeightKind::AlphaSquared};
    const Combiner combiner = Combiner::bsd(25.0);
    const Label label = Label::cls(0);

    Rng init_rng(derive_stream(3, 3));
    SplatGenerator gen = SplatGenerator::random_init(16, 16, 24, 0.08, init_rng);
    Optimizer opt(OptimizerConfig{OptimizerKind::Sgd, 0.005}, gen.param_count());
    TimestepSampler sampler(20, 550, derive_stream(3, 1));
    Rng noise(derive_stream(3, 2));

    write_ppm("splat_before.ppm", 16, 16, gen.render().image);
    for (int k = 1; k <= 3000; ++k) {
        const StepRecord rec =
            distill_step(gen, opt, oracle, sched, weight, combiner, label, sampler, noise, k);
        if (k % 500 == 0) {
            std::printf("step %4d  log p(x|y)=%10.2f\n", rec.step, rec.log_px_given_y);
        }
    }
    write_ppm("splat_after.ppm", 16, 16, gen.render().image);
    std::printf("wrote splat_before.ppm and splat_after.ppm\n");
    return 0;
}
