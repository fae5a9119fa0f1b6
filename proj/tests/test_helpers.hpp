#pragma once

#include "ssg/core.hpp"
#include "ssg/problems.hpp"

#include <memory>

namespace ssg::test {

// f(x) = ||x||_1 with the zero-at-kink convention.
inline Oracle l1_oracle() {
    Oracle o;
    o.weak_convexity = 0.0;
    o.eval = [](const Vector& x) {
        SubgradientResult r;
        r.subgradient.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            r.value += std::abs(x[i]);
            r.subgradient[i] = x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0);
        }
        return r;
    };
    return o;
}

// g(x) = ||x||^2 - radius^2
inline Oracle sphere_oracle(double radius = 1.0) {
    Oracle o;
    o.weak_convexity = 0.0;
    o.eval = [radius](const Vector& x) {
        SubgradientResult r;
        r.value = norm_sq(x) - radius * radius;
        r.subgradient = scaled(x, 2.0);
        return r;
    };
    return o;
}

inline Oracle constant_oracle(double value, std::size_t dim) {
    Oracle o;
    o.eval = [value, dim](const Vector&) {
        SubgradientResult r;
        r.value = value;
        r.subgradient.assign(dim, 0.0);
        return r;
    };
    return o;
}

// Tiny seeded classification dataset with a +-1 group column at feature 0.
inline std::shared_ptr<LinearClassifierData> synthetic_groups(std::size_t dim, std::size_t n_train,
                                                              std::size_t n_per_group,
                                                              std::uint64_t seed,
                                                              double feature_scale = 1.0) {
    auto data = std::make_shared<LinearClassifierData>();
    data->dimension = dim;
    RngStream rng(seed);
    Vector truth = rng.normal_vector(dim);
    auto draw_row = [&](double group_value) {
        SparseVector row;
        row.entries.emplace_back(0, group_value);
        for (std::size_t j = 1; j < dim; ++j)
            row.entries.emplace_back(j, feature_scale * rng.uniform(-1.0, 1.0));
        return row;
    };
    for (std::size_t i = 0; i < n_train; ++i) {
        SparseVector row = draw_row(rng.uniform() < 0.5 ? 1.0 : -1.0);
        double score = row.dot(truth) + 0.3 * rng.normal();
        data->features.push_back(std::move(row));
        data->labels.push_back(score >= 0.0 ? 1 : -1);
    }
    for (std::size_t i = 0; i < n_per_group; ++i) {
        data->group_p.push_back(draw_row(1.0));
        data->group_u.push_back(draw_row(-1.0));
    }
    return data;
}

}  // namespace ssg::test
