#ifndef BAYESTREE_DOMAINS_HPP
#define BAYESTREE_DOMAINS_HPP

// Encoders from other sample spaces onto the unit interval. Every domain is
// reduced to a stream of bits, the path of a point through the bisection
// tree; the stream is then read back as a number in [0,1) for the engine.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bayestree/tree.hpp"

namespace bayestree {

/// Lazily generated bit sequence. bit(i) is the branch taken at depth i.
class BitStream {
public:
    using Generator = std::function<int(std::size_t)>;

    BitStream(Generator gen, std::string origin) : gen_(std::move(gen)), origin_(std::move(origin)) {}

    int bit(std::size_t i) const { return gen_(i); }
    std::vector<int> prefix(std::size_t length) const;
    const std::string& origin() const { return origin_; }

    // The number 0.b0 b1 b2 ... truncated after max_bits bits. Reading stops
    // early once 53 significant bits have been consumed, so the result is
    // exact and strictly below 1.
    double to_unit(int max_bits) const;

private:
    Generator gen_;
    std::string origin_;
};

struct DomainSpec {
    enum class Kind { unit, positive, real, cube, classified };
    Kind kind = Kind::unit;
    int dimension = 1;   // cube only

    // "unit", "positive", "real", "cube:<d>", "classify"
    static DomainSpec parse(const std::string& text);
    std::string name() const;
};

BitStream encode_unit(double x);
BitStream encode_cube(std::span<const double> point);
// Class bit first, then the observation's bits.
BitStream encode_classified(const BitStream& observation, int cls);

// x > 1 -> 1/x
double compactify_positive(double x);
// The x in (0,1) with (2x - 1) / (x (1 - x)) == y.
double compactify_real(double y);
// Inverse of compactify_real.
double expand_real(double x);

// p(class 1 | D, observation) for a tree fitted on classified encodings.
double classify(const FittedTree& tree, const BitStream& observation);

} // namespace bayestree

#endif
