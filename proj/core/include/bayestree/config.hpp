#ifndef BAYESTREE_CONFIG_HPP
#define BAYESTREE_CONFIG_HPP

#include <stdexcept>
#include <string>

namespace bayestree {

// Bad input to a public operation (range, ordering, malformed config).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Two or more data points share a cell at max_depth under the strict policy.
class DuplicateDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// remove() of a value that is not stored in the tree.
class NotFoundError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DuplicatePolicy { truncate, error };

/// Model hyperparameters and numeric guards.
///
/// split_prior is the prior probability that a cell is split rather than
/// uniform; 1/2 is the neutral choice. Values above 1/2 give the prior a
/// positive probability of an infinite tree and are rejected.
struct ModelConfig {
    double split_prior = 0.5;
    int dim_trunc = 16;             // length of the dimension distribution
    int max_depth = 52;             // deepest cell ever created
    double overflow_threshold = 100.0;
    DuplicatePolicy duplicate_policy = DuplicatePolicy::truncate;

    // Throws ArgumentError if any field is out of range.
    void validate() const;
};

const char* to_string(DuplicatePolicy policy);
DuplicatePolicy parse_duplicate_policy(const std::string& name);

} // namespace bayestree

#endif
