#pragma once

#include <cstdint>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "ssg/core.hpp"
#include "ssg/problems.hpp"

namespace ssg {

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// libsvm text format: "label idx:val idx:val ..." with 1-based indices.
// Labels map to +-1; {0,1} labels are remapped (0 -> -1). Non-monotone indices
// are tolerated.
// ---------------------------------------------------------------------------

inline LinearClassifierData parse_libsvm(std::istream& in) {
    LinearClassifierData data;
    std::string line;
    long line_number = 0;
    bool saw_zero_label = false;
    std::vector<double> raw_labels;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string token;
        if (!(ls >> token))
            continue;
        double label = 0.0;
        try {
            std::size_t used = 0;
            label = std::stod(token, &used);
            if (used != token.size()) throw std::invalid_argument(token);
        } catch (const std::exception&) {
            throw ParseError("parse_libsvm: bad label at line " + std::to_string(line_number));
        }
        if (label == 0.0) saw_zero_label = true;

        SparseVector row;
        while (ls >> token) {
            const auto colon = token.find(':');
            if (colon == std::string::npos)
                throw ParseError("parse_libsvm: missing ':' at line " + std::to_string(line_number));
            std::size_t index = 0;
            double value = 0.0;
            try {
                std::size_t used = 0;
                const long idx = std::stol(token.substr(0, colon), &used);
                if (used != colon || idx < 1) throw std::invalid_argument(token);
                index = static_cast<std::size_t>(idx);
                const std::string val_str = token.substr(colon + 1);
                value = std::stod(val_str, &used);
                if (used != val_str.size()) throw std::invalid_argument(token);
            } catch (const std::exception&) {
                throw ParseError("parse_libsvm: bad feature '" + token + "' at line " +
                                 std::to_string(line_number));
            }
            row.entries.emplace_back(index - 1, value);  // 1-based -> 0-based
            data.dimension = std::max(data.dimension, index);
        }
        data.features.push_back(std::move(row));
        raw_labels.push_back(label);
    }
    data.labels.reserve(raw_labels.size());
    for (double l : raw_labels) {
        if (saw_zero_label)
            data.labels.push_back(l > 0.0 ? 1 : -1);  // {0,1} convention
        else
            data.labels.push_back(l >= 0.0 ? 1 : -1);
    }
    return data;
}

// ---------------------------------------------------------------------------
// The split protocol: seeded shuffle, first 2/3 as the constraint set D, the
// remaining 1/3 partitioned into D_p / D_u by a predicate on one feature.
// ---------------------------------------------------------------------------

struct GroupRule {
    enum class Kind { equals, in_range };
    std::size_t feature_index = 0;  // 0-based
    Kind kind = Kind::equals;
    double value = 1.0;  // equals: feature == value
    double lo = 0.0;     // in_range: lo <= feature <= hi
    double hi = 0.0;

    bool matches(const SparseVector& row) const {
        const double v = row.get(feature_index);
        return kind == Kind::equals ? v == value : (v >= lo && v <= hi);
    }

    std::string describe() const {
        if (kind == Kind::equals)
            return "feature[" + std::to_string(feature_index) + "] == " + std::to_string(value);
        return "feature[" + std::to_string(feature_index) + "] in [" + std::to_string(lo) + ", " +
               std::to_string(hi) + "]";
    }
};

struct DatasetSplit {
    LinearClassifierData data;  // features/labels = D; group_p/group_u filled from the held-out third
    std::uint64_t split_seed = 0;
    std::string group_rule;
    std::size_t constraint_size = 0;
    std::size_t group_p_size = 0;
    std::size_t group_u_size = 0;
};

inline DatasetSplit split_dataset(const LinearClassifierData& raw, const GroupRule& rule,
                                  std::uint64_t seed) {
    if (raw.features.empty()) throw ContractError("split_dataset: empty dataset");
    std::vector<std::size_t> order(raw.features.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    RngStream rng(seed);
    rng.shuffle(order);

    const std::size_t n_constraint = (2 * order.size()) / 3;
    DatasetSplit split;
    split.split_seed = seed;
    split.group_rule = rule.describe();
    split.data.dimension = raw.dimension;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const std::size_t i = order[k];
        if (k < n_constraint) {
            split.data.features.push_back(raw.features[i]);
            split.data.labels.push_back(raw.labels[i]);
        } else if (rule.matches(raw.features[i])) {
            split.data.group_p.push_back(raw.features[i]);
        } else {
            split.data.group_u.push_back(raw.features[i]);
        }
    }
    split.constraint_size = split.data.features.size();
    split.group_p_size = split.data.group_p.size();
    split.group_u_size = split.data.group_u.size();
    if (split.data.group_p.empty())
        throw ContractError("split_dataset: protected group is empty under rule " + rule.describe());
    if (split.data.group_u.empty())
        throw ContractError("split_dataset: unprotected group is empty under rule " +
                            rule.describe());
    return split;
}

}  // namespace ssg
