#ifndef BAYESTREE_TOOLS_CLI_HPP
#define BAYESTREE_TOOLS_CLI_HPP

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "bayestree/config.hpp"
#include "bayestree/domains.hpp"

namespace bayestree::cli {

enum ExitCode : int {
    kOk = 0,
    kBadInput = 2,
    kModelError = 3,
};

// Malformed input text, reported with its 1-based line number.
class InputError : public std::runtime_error {
public:
    InputError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// One record per line; '#' lines and blank lines are skipped. Values are
// mapped onto [0,1) by the domain encoder. Classified records carry a
// trailing 0/1 label.
std::vector<double> read_points(std::istream& in, const DomainSpec& domain,
                                const ModelConfig& config);

// Maps a single record (without class label) onto [0,1).
double encode_record(const std::string& text, const DomainSpec& domain, const ModelConfig& config,
                     std::size_t line = 0);

// Entry point. Reads the data set from `in` unless a path is given.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err);

} // namespace bayestree::cli

#endif
