#include "bayestree/domains.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bayestree {

namespace {

// floor(2^(i+1) x) mod 2, exact in binary floating point.
int unit_bit(double x, std::size_t i) {
    // No double below 1 has set bits past position 1074.
    if (i >= 1100)
        return 0;
    const double scaled = std::floor(std::ldexp(x, static_cast<int>(i) + 1));
    return static_cast<int>(std::fmod(scaled, 2.0));
}

void check_unit(double x, const char* what) {
    if (!(x >= 0.0 && x < 1.0))
        throw ArgumentError(std::string(what) + ": coordinate outside [0,1)");
}

} // namespace

std::vector<int> BitStream::prefix(std::size_t length) const {
    std::vector<int> bits(length);
    for (std::size_t i = 0; i < length; ++i)
        bits[i] = bit(i);
    return bits;
}

double BitStream::to_unit(int max_bits) const {
    double x = 0.0;
    int significant = 0;
    for (int i = 0; i < max_bits && significant < 53; ++i) {
        const int b = bit(static_cast<std::size_t>(i));
        if (b)
            x += std::ldexp(1.0, -(i + 1));
        if (b || significant > 0)
            ++significant;
    }
    return x;
}

DomainSpec DomainSpec::parse(const std::string& text) {
    DomainSpec spec;
    if (text == "unit") {
        spec.kind = Kind::unit;
    } else if (text == "positive") {
        spec.kind = Kind::positive;
    } else if (text == "real") {
        spec.kind = Kind::real;
    } else if (text == "classify") {
        spec.kind = Kind::classified;
    } else if (text.rfind("cube:", 0) == 0) {
        spec.kind = Kind::cube;
        std::size_t used = 0;
        int d = 0;
        try {
            d = std::stoi(text.substr(5), &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != text.size() - 5 || d < 1)
            throw ArgumentError("cube domain needs a positive dimension, got '" + text + "'");
        spec.dimension = d;
    } else {
        throw ArgumentError("unknown domain '" + text + "'");
    }
    return spec;
}

std::string DomainSpec::name() const {
    switch (kind) {
    case Kind::unit: return "unit";
    case Kind::positive: return "positive";
    case Kind::real: return "real";
    case Kind::cube: return "cube:" + std::to_string(dimension);
    case Kind::classified: return "classify";
    }
    return "unit";
}

BitStream encode_unit(double x) {
    check_unit(x, "encode_unit");
    return BitStream([x](std::size_t i) { return unit_bit(x, i); }, "unit");
}

BitStream encode_cube(std::span<const double> point) {
    if (point.empty())
        throw ArgumentError("encode_cube: empty point");
    for (double c : point)
        check_unit(c, "encode_cube");
    std::vector<double> coords(point.begin(), point.end());
    const std::size_t d = coords.size();
    return BitStream(
        [coords = std::move(coords), d](std::size_t i) { return unit_bit(coords[i % d], i / d); },
        "cube:" + std::to_string(d));
}

BitStream encode_classified(const BitStream& observation, int cls) {
    if (cls != 0 && cls != 1)
        throw ArgumentError("encode_classified: class must be 0 or 1");
    return BitStream(
        [observation, cls](std::size_t i) { return i == 0 ? cls : observation.bit(i - 1); },
        "classify");
}

double compactify_positive(double x) {
    if (!(x > 1.0))
        throw ArgumentError("compactify_positive: value must exceed 1");
    return 1.0 / x;
}

double compactify_real(double y) {
    if (!std::isfinite(y))
        throw ArgumentError("compactify_real: value must be finite");
    // Two algebraically equal forms, each free of cancellation on its range;
    // the extended intermediate keeps the result faithfully rounded.
    const long double ly = y;
    const long double root = std::hypot(ly, 2.0L);
    if (y <= 2.0)
        return static_cast<double>(2.0L / ((2.0L - ly) + root));
    // Beyond ~1e16 the exact value rounds to 1.
    return std::min(static_cast<double>(((ly - 2.0L) + root) / (2.0L * ly)),
                    std::nextafter(1.0, 0.0));
}

double expand_real(double x) {
    if (!(x > 0.0 && x < 1.0))
        throw ArgumentError("expand_real: value must lie in (0,1)");
    return (2.0 * x - 1.0) / (x * (1.0 - x));
}

double classify(const FittedTree& tree, const BitStream& observation) {
    const int bits = tree.config().max_depth;
    const double x0 = encode_classified(observation, 0).to_unit(bits);
    const double x1 = encode_classified(observation, 1).to_unit(bits);
    const double l0 = log_evidence_with(tree, x0);
    const double l1 = log_evidence_with(tree, x1);
    // p1 / (p0 + p1) = 1 / (1 + e^(l0 - l1))
    return 1.0 / (1.0 + std::exp(l0 - l1));
}

} // namespace bayestree
