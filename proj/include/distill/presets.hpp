#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "distill/oracle.hpp"

namespace distill {

namespace detail {

inline GmmClass single_component_class(std::vector<double> mean, double tau) {
    GmmClass cls;
    cls.components.push_back(GmmComponent{1.0, std::move(mean), tau});
    return cls;
}

}  // namespace detail

/// Named oracles used by the shipped configs and the test suite. The
/// file-backed presets under configs/presets/ mirror these definitions
/// literally (a unit test keeps them in sync); "blob-16" is procedural
/// (768-dimensional image means) and exists only in this registry.
inline std::vector<std::string> preset_names() {
    return {"two-class-2d", "two-class-1d", "one-class-2d", "grid-9", "two-moons-gmm", "blob-16"};
}

inline GmmOracle make_preset(const std::string& name) {
    GmmOracle o;
    if (name == "two-class-2d") {
        // A broad two-lobe "background" class bracketing a tighter "target"
        // class; the workhorse preset for the combiner-ranking and
        // angle-census experiments.  Because the target class is narrower
        // than the background and flanked by it on both sides, the classifier
        // log-probability has a finite maximiser a little beyond the target
        // mean at every noise level, so classifier-heavy optimization
        // over-shoots into a low-density region instead of running off to
        // infinity.
        o.dim = 2;
        GmmClass background;
        background.components.push_back({0.5, {0.0, 0.0}, 1.0});
        background.components.push_back({0.5, {12.0, 0.0}, 1.0});
        o.classes.push_back(background);
        o.classes.push_back(detail::single_component_class({2.5, 0.0}, 0.75));
        o.class_prior = {0.92, 0.08};
    } else if (name == "two-class-1d") {
        o.dim = 1;
        o.classes.push_back(detail::single_component_class({-2.0}, 0.35));
        o.classes.push_back(detail::single_component_class({2.0}, 0.35));
        o.class_prior = {0.5, 0.5};
    } else if (name == "one-class-2d") {
        // Standard normal, single class: the classifier direction vanishes.
        o.dim = 2;
        o.classes.push_back(detail::single_component_class({0.0, 0.0}, 1.0));
        o.class_prior = {1.0};
    } else if (name == "grid-9") {
        // Nine classes on a 3x3 grid.
        o.dim = 2;
        for (double gy : {-2.0, 0.0, 2.0}) {
            for (double gx : {-2.0, 0.0, 2.0}) {
                o.classes.push_back(detail::single_component_class({gx, gy}, 0.3));
                o.class_prior.push_back(0.1111111111111111);
            }
        }
        // Nudge the priors onto the simplex exactly.
        o.class_prior[8] = 1.0 - 8.0 * 0.1111111111111111;
    } else if (name == "two-moons-gmm") {
        // Two interleaved arcs, each approximated by six components.
        o.dim = 2;
        const double xs[6] = {1.0, 0.809, 0.309, -0.309, -0.809, -1.0};
        const double ys[6] = {0.0, 0.5878, 0.9511, 0.9511, 0.5878, 0.0};
        GmmClass upper, lower;
        const double w = 1.0 / 6.0;
        for (int i = 0; i < 6; ++i) {
            upper.components.push_back(GmmComponent{w, {xs[i], ys[i]}, 0.15});
            lower.components.push_back(GmmComponent{w, {1.0 - xs[i], 0.5 - ys[i]}, 0.15});
        }
        o.classes = {upper, lower};
        o.class_prior = {0.5, 0.5};
    } else if (name == "blob-16") {
        // Image-space oracle for the splat generator: 16x16 RGB targets, one
        // class with a warm blob upper-left, one with a cool blob lower-right.
        const int wpx = 16, hpx = 16;
        o.dim = wpx * hpx * 3;
        auto blob_image = [&](double cx, double cy, double radius, const double color[3]) {
            std::vector<double> img(static_cast<std::size_t>(wpx) * hpx * 3, 0.05);
            for (int j = 0; j < hpx; ++j) {
                for (int i = 0; i < wpx; ++i) {
                    const double px = (i + 0.5) / wpx;
                    const double py = (j + 0.5) / hpx;
                    const double d2 = (px - cx) * (px - cx) + (py - cy) * (py - cy);
                    const double k = std::exp(-d2 / (2.0 * radius * radius));
                    const std::size_t p = (static_cast<std::size_t>(j) * wpx + i) * 3;
                    for (int ch = 0; ch < 3; ++ch) img[p + ch] += color[ch] * k;
                }
            }
            return img;
        };
        const double warm[3] = {0.85, 0.45, 0.10};
        const double cool[3] = {0.10, 0.45, 0.85};
        const double overwarm[3] = {1.87, 0.99, 0.22};
        o.classes.push_back(detail::single_component_class(blob_image(0.3, 0.3, 0.15, warm), 0.25));
        // The alternative class holds the cool blob plus a garishly
        // over-saturated warm blob, so past a finite saturation level extra
        // warmth counts as evidence *against* the warm class; that keeps the
        // classifier peak finite at every noise level and stops
        // classifier-heavy runs from drifting off to unbounded saturation.
        GmmClass alt;
        alt.components.push_back(GmmComponent{0.5, blob_image(0.7, 0.7, 0.15, cool), 0.25});
        alt.components.push_back(GmmComponent{0.5, blob_image(0.3, 0.3, 0.15, overwarm), 0.25});
        o.classes.push_back(alt);
        o.class_prior = {0.5, 0.5};
    } else {
        throw std::invalid_argument("unknown oracle preset: " + name);
    }
    o.validate();
    return o;
}

}  // namespace distill
