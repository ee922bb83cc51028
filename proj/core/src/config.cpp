#include "bayestree/config.hpp"

#include <cmath>

namespace bayestree {

void ModelConfig::validate() const {
    if (!(split_prior > 0.0 && split_prior <= 0.5))
        throw ArgumentError("split_prior must lie in (0, 1/2]");
    if (dim_trunc < 1)
        throw ArgumentError("dim_trunc must be at least 1");
    if (max_depth < 1)
        throw ArgumentError("max_depth must be at least 1");
    if (!(overflow_threshold > 0.0) || !std::isfinite(overflow_threshold))
        throw ArgumentError("overflow_threshold must be positive and finite");
}

const char* to_string(DuplicatePolicy policy) {
    return policy == DuplicatePolicy::truncate ? "truncate" : "error";
}

DuplicatePolicy parse_duplicate_policy(const std::string& name) {
    if (name == "truncate")
        return DuplicatePolicy::truncate;
    if (name == "error")
        return DuplicatePolicy::error;
    throw ArgumentError("unknown duplicate policy '" + name + "'");
}

} // namespace bayestree
