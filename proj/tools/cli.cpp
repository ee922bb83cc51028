#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "bayestree/model.hpp"
#include "bayestree/testkit.hpp"
#include "bayestree/tree.hpp"

namespace bayestree::cli {

using Json = nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(const std::string& s) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(s);
    while (std::getline(ss, field, ','))
        fields.push_back(trim(field));
    if (!s.empty() && s.back() == ',')
        fields.emplace_back();
    return fields;
}

double parse_number(const std::string& text, std::size_t line) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || text.empty())
        throw InputError(line, "not a number: '" + text + "'");
    if (!std::isfinite(value))
        throw InputError(line, "non-finite value: '" + text + "'");
    return value;
}

double encode_fields(const std::vector<std::string>& fields, const DomainSpec& domain,
                     const ModelConfig& config, std::size_t line) {
    const auto expect = [&](std::size_t count) {
        if (fields.size() != count)
            throw InputError(line, "expected " + std::to_string(count) + " field(s), got " +
                                       std::to_string(fields.size()));
    };
    switch (domain.kind) {
    case DomainSpec::Kind::unit: {
        expect(1);
        const double x = parse_number(fields[0], line);
        if (!(x >= 0.0 && x < 1.0))
            throw InputError(line, "value outside [0,1): '" + fields[0] + "'");
        return x;
    }
    case DomainSpec::Kind::positive: {
        expect(1);
        const double x = parse_number(fields[0], line);
        if (!(x > 1.0))
            throw InputError(line, "positive domain needs values > 1: '" + fields[0] + "'");
        return compactify_positive(x);
    }
    case DomainSpec::Kind::real:
        expect(1);
        return compactify_real(parse_number(fields[0], line));
    case DomainSpec::Kind::cube: {
        expect(static_cast<std::size_t>(domain.dimension));
        std::vector<double> point;
        for (const auto& f : fields) {
            const double c = parse_number(f, line);
            if (!(c >= 0.0 && c < 1.0))
                throw InputError(line, "coordinate outside [0,1): '" + f + "'");
            point.push_back(c);
        }
        return encode_cube(point).to_unit(config.max_depth);
    }
    case DomainSpec::Kind::classified: {
        // Observation only; the label is handled by the caller.
        expect(1);
        const double o = parse_number(fields[0], line);
        if (!(o >= 0.0 && o < 1.0))
            throw InputError(line, "observation outside [0,1): '" + fields[0] + "'");
        return o;
    }
    }
    return 0.0;
}

std::string fmt_num(double x) { return fmt::format("{:.17g}", x); }

struct Options {
    std::string input = "-";
    std::string domain = "unit";
    int dim_trunc = 16;
    int max_depth = 52;
    double split_prior = 0.5;
    double overflow_threshold = 100.0;
    std::string duplicates = "truncate";
    int grid = 0;
    std::optional<std::string> at;
    std::optional<std::uint64_t> seed;
    std::string format = "json";
    std::string sizes = "100,1000,10000";
    std::string dist = "singular";
    std::int64_t count = 1000;
    std::vector<std::string> inserts;
    std::vector<std::string> removes;
};

ModelConfig model_config(const Options& o) {
    ModelConfig c;
    c.split_prior = o.split_prior;
    c.dim_trunc = o.dim_trunc;
    c.max_depth = o.max_depth;
    c.overflow_threshold = o.overflow_threshold;
    c.duplicate_policy = parse_duplicate_policy(o.duplicates);
    c.validate();
    return c;
}

Json config_json(const ModelConfig& c, const DomainSpec& d) {
    return Json{{"domain", d.name()},
                {"split_prior", c.split_prior},
                {"dim_trunc", c.dim_trunc},
                {"max_depth", c.max_depth},
                {"overflow_threshold", c.overflow_threshold},
                {"duplicates", to_string(c.duplicate_policy)}};
}

Json dims_json(const DimensionDistribution& dims) {
    return Json{{"probs", dims.probs}, {"tail_mass", dims.tail_mass}};
}

Json base_report(const std::string& command, const ModelConfig& config, const DomainSpec& domain,
                 const FittedTree& tree) {
    const NodeSummary& s = tree.root().summary();
    Json j;
    j["command"] = command;
    j["config"] = config_json(config, domain);
    j["n"] = tree.size();
    j["ln_evidence"] = s.log_evidence;
    j["node_count"] = s.node_count;
    j["dims"] = dims_json(s.dims);
    j["heights"] = Json{{"average", s.avg_height}};
    return j;
}

std::vector<double> grid_points(int grid) {
    std::vector<double> xs(static_cast<std::size_t>(grid));
    for (int i = 0; i < grid; ++i)
        xs[static_cast<std::size_t>(i)] = (static_cast<double>(i) + 0.5) / static_cast<double>(grid);
    return xs;
}

std::vector<std::int64_t> parse_sizes(const std::string& text) {
    std::vector<std::int64_t> sizes;
    for (const auto& f : split_fields(text)) {
        std::int64_t v = 0;
        const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
        if (ec != std::errc() || ptr != f.data() + f.size() || v < 0)
            throw ArgumentError("--sizes: not a size: '" + f + "'");
        sizes.push_back(v);
    }
    if (sizes.empty())
        throw ArgumentError("--sizes: empty list");
    return sizes;
}

void write_grid_csv(std::ostream& out, const Json& grid) {
    out << "x,value\n";
    for (const auto& row : grid)
        out << fmt_num(row["x"].get<double>()) << ',' << fmt_num(row["value"].get<double>())
            << '\n';
}

class Runner {
public:
    Runner(const std::string& command, const Options& opts, std::istream& in, std::ostream& out)
        : command_(command), opts_(opts), in_(in), out_(out),
          domain_(DomainSpec::parse(opts.domain)), config_(model_config(opts)) {}

    void run() {
        if (command_ == "experiment") {
            experiment();
            return;
        }
        if (command_ == "classify" && domain_.kind != DomainSpec::Kind::classified)
            domain_ = DomainSpec::parse("classify");
        const auto data = load();
        FittedTree tree = build(data, config_);
        for (const auto& s : opts_.inserts)
            tree = insert(tree, encode_record(s, domain_, config_));
        for (const auto& s : opts_.removes)
            tree = remove(tree, encode_record(s, domain_, config_));

        Json report = base_report(command_, config_, domain_, tree);
        if (command_ == "evidence")
            evidence(tree, report);
        else if (command_ == "density" || command_ == "cdf" || command_ == "classify")
            grid_command(tree, report);
        else if (command_ == "heights")
            heights(tree, report);
        else if (command_ == "dims")
            dims(tree, report);
        else if (command_ == "sample")
            sample_command(tree, report);
        else if (command_ == "map-tree")
            map_tree(tree, report);
    }

private:
    std::vector<double> load() {
        if (opts_.input == "-")
            return read_points(in_, domain_, config_);
        std::ifstream file(opts_.input);
        if (!file)
            throw InputError(0, "cannot open '" + opts_.input + "'");
        return read_points(file, domain_, config_);
    }

    bool csv() const { return opts_.format == "csv"; }

    void emit(const Json& j) { out_ << j.dump(2) << '\n'; }

    std::vector<double> query_points(int default_grid) const {
        if (opts_.at)
            return {encode_record(*opts_.at, domain_, config_)};
        return grid_points(opts_.grid > 0 ? opts_.grid : default_grid);
    }

    void evidence(const FittedTree& tree, Json& report) {
        if (csv()) {
            out_ << "ln_evidence,node_count,n\n"
                 << fmt_num(report["ln_evidence"].get<double>()) << ','
                 << report["node_count"].get<std::int64_t>() << ',' << tree.size() << '\n';
            return;
        }
        emit(report);
    }

    void grid_command(const FittedTree& tree, Json& report) {
        Json grid = Json::array();
        for (double x : query_points(100)) {
            double value = 0.0;
            if (command_ == "density")
                value = predictive_density(tree, x);
            else if (command_ == "cdf")
                value = cdf(tree, x);
            else
                value = classify(tree, encode_unit(x));
            grid.push_back(Json{{"x", x}, {"value", value}});
        }
        if (csv()) {
            write_grid_csv(out_, grid);
            return;
        }
        report["grid"] = std::move(grid);
        emit(report);
    }

    void heights(const FittedTree& tree, Json& report) {
        if (opts_.at) {
            const double x = encode_record(*opts_.at, domain_, config_);
            report["heights"]["at_query"] = height_at(tree, x);
        }
        if (opts_.grid > 0) {
            Json grid = Json::array();
            for (double x : grid_points(opts_.grid))
                grid.push_back(Json{{"x", x}, {"value", height_at(tree, x)}});
            report["grid"] = std::move(grid);
        }
        if (csv()) {
            if (report.contains("grid")) {
                write_grid_csv(out_, report["grid"]);
                return;
            }
            out_ << "average,at_query\n" << fmt_num(report["heights"]["average"].get<double>()) << ',';
            if (report["heights"].contains("at_query"))
                out_ << fmt_num(report["heights"]["at_query"].get<double>());
            out_ << '\n';
            return;
        }
        emit(report);
    }

    void dims(const FittedTree& tree, Json& report) {
        if (csv()) {
            const auto& d = tree.root().summary().dims;
            out_ << "k,prob\n";
            for (std::size_t k = 0; k < d.probs.size(); ++k)
                out_ << k << ',' << fmt_num(d.probs[k]) << '\n';
            out_ << "tail," << fmt_num(d.tail_mass) << '\n';
            return;
        }
        emit(report);
    }

    void sample_command(const FittedTree& tree, Json& report) {
        if (!opts_.seed)
            throw ArgumentError("sample requires --seed");
        if (opts_.count < 0)
            throw ArgumentError("--count must be nonnegative");
        std::mt19937_64 rng(*opts_.seed);
        std::vector<double> xs(static_cast<std::size_t>(opts_.count));
        for (double& x : xs)
            x = sample(tree, rng);
        if (csv()) {
            out_ << "x\n";
            for (double x : xs)
                out_ << fmt_num(x) << '\n';
            return;
        }
        report["seed"] = *opts_.seed;
        report["samples"] = xs;
        emit(report);
    }

    void map_tree(const FittedTree& tree, Json& report) {
        const auto cells = map_skeleton(tree);
        if (csv()) {
            out_ << "lo,hi,depth,count\n";
            for (const auto& c : cells)
                out_ << fmt_num(c.lo) << ',' << fmt_num(c.hi) << ',' << c.depth << ',' << c.count
                     << '\n';
            return;
        }
        Json arr = Json::array();
        for (const auto& c : cells)
            arr.push_back(Json{{"lo", c.lo}, {"hi", c.hi}, {"depth", c.depth}, {"count", c.count}});
        report["map_cells"] = std::move(arr);
        emit(report);
    }

    void experiment() {
        const auto sizes = parse_sizes(opts_.sizes);
        const auto dist = testkit::test_distribution(opts_.dist);
        const int grid = opts_.grid > 0 ? opts_.grid : 1000;
        const std::uint64_t seed = opts_.seed.value_or(1);
        const auto result = testkit::consistency_experiment(dist, sizes, grid, config_, seed);

        if (csv()) {
            out_ << "n,mean_abs_log_ratio,expected_dim,avg_height,ln_evidence,node_count\n";
            for (const auto& r : result.rows)
                out_ << r.n << ',' << fmt_num(r.mean_abs_log_ratio) << ','
                     << fmt_num(r.expected_dim) << ',' << fmt_num(r.avg_height) << ','
                     << fmt_num(r.log_evidence) << ',' << r.node_count << '\n';
            return;
        }
        Json rows = Json::array();
        for (const auto& r : result.rows) {
            Json profile = Json::array();
            for (const auto& p : r.profile)
                profile.push_back(Json{{"x", p.x},
                                       {"density", p.density},
                                       {"truth", p.truth},
                                       {"height", p.height}});
            rows.push_back(Json{{"n", r.n},
                                {"mean_abs_log_ratio", r.mean_abs_log_ratio},
                                {"expected_dim", r.expected_dim},
                                {"avg_height", r.avg_height},
                                {"ln_evidence", r.log_evidence},
                                {"node_count", r.node_count},
                                {"dims", dims_json(r.dims)},
                                {"profile", std::move(profile)}});
        }
        Json report;
        report["command"] = command_;
        report["config"] = config_json(config_, domain_);
        // Top-level summary fields describe the largest fit.
        const testkit::ExperimentRow* last = result.rows.empty() ? nullptr : &result.rows.back();
        report["n"] = last ? last->n : 0;
        report["ln_evidence"] = last ? last->log_evidence : 0.0;
        report["node_count"] = last ? last->node_count : 1;
        report["dims"] = last ? dims_json(last->dims) : Json::object();
        report["heights"] = Json{{"average", last ? last->avg_height : 0.0}};
        report["experiment"] = Json{{"distribution", result.distribution},
                                    {"seed", seed},
                                    {"error_strictly_decreasing", result.error_strictly_decreasing()},
                                    {"rows", std::move(rows)}};
        emit(report);
    }

    std::string command_;
    const Options& opts_;
    std::istream& in_;
    std::ostream& out_;
    DomainSpec domain_;
    ModelConfig config_;
};

void add_model_options(CLI::App* sub, Options& o) {
    sub->add_option("input", o.input, "data file, '-' for standard input")->capture_default_str();
    sub->add_option("--domain", o.domain, "unit|positive|real|cube:<d>|classify")
        ->capture_default_str();
    sub->add_option("--dim-trunc", o.dim_trunc, "length of the dimension distribution")
        ->capture_default_str();
    sub->add_option("--max-depth", o.max_depth, "deepest cell")->capture_default_str();
    sub->add_option("--split-prior", o.split_prior, "prior split probability in (0, 1/2]")
        ->capture_default_str();
    sub->add_option("--overflow-threshold", o.overflow_threshold)->capture_default_str();
    sub->add_option("--duplicates", o.duplicates, "truncate|error")
        ->check(CLI::IsMember({"truncate", "error"}))
        ->capture_default_str();
    sub->add_option("--grid", o.grid, "grid size")->check(CLI::Range(2, 100000000));
    sub->add_option("--at", o.at, "single query point");
    sub->add_option("--seed", o.seed, "random seed");
    sub->add_option("--format", o.format, "json|csv")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    sub->add_option("--insert", o.inserts, "add a point after fitting (repeatable)");
    sub->add_option("--remove", o.removes, "remove a stored point after fitting (repeatable)");
}

} // namespace

double encode_record(const std::string& text, const DomainSpec& domain, const ModelConfig& config,
                     std::size_t line) {
    return encode_fields(split_fields(trim(text)), domain, config, line);
}

std::vector<double> read_points(std::istream& in, const DomainSpec& domain,
                                const ModelConfig& config) {
    std::vector<double> points;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string text = trim(raw);
        if (text.empty() || text.front() == '#')
            continue;
        auto fields = split_fields(text);
        if (domain.kind == DomainSpec::Kind::classified) {
            if (fields.size() != 2)
                throw InputError(line, "expected 'observation,label'");
            const std::string& label = fields.back();
            if (label != "0" && label != "1")
                throw InputError(line, "class label must be 0 or 1, got '" + label + "'");
            fields.pop_back();
            const double o = encode_fields(fields, domain, config, line);
            points.push_back(
                encode_classified(encode_unit(o), label == "1" ? 1 : 0).to_unit(config.max_depth));
            continue;
        }
        points.push_back(encode_fields(fields, domain, config, line));
    }
    return points;
}

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err) {
    CLI::App app{"Exact inference for the infinite binary tree mixture density model",
                 "bayestree"};
    app.require_subcommand(1);
    Options opts;

    struct Command {
        const char* name;
        const char* help;
    };
    const Command commands[] = {
        {"evidence", "log evidence and tree size"},
        {"density", "posterior predictive density on a grid or at --at"},
        {"cdf", "posterior predictive CDF on a grid or at --at"},
        {"sample", "draw --count points from the posterior predictive (needs --seed)"},
        {"dims", "posterior distribution of the effective dimension"},
        {"heights", "expected tree height, on average and at --at / on --grid"},
        {"classify", "probability of class 1 for observations (data lines: value,label)"},
        {"map-tree", "cells of the MAP-like tree skeleton"},
        {"experiment", "convergence experiment on a built-in test density"},
    };
    for (const auto& c : commands) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        add_model_options(sub, opts);
        if (std::string(c.name) == "sample")
            sub->add_option("--count", opts.count, "number of samples")->capture_default_str();
        if (std::string(c.name) == "experiment") {
            sub->add_option("--sizes", opts.sizes, "comma-separated sample sizes")
                ->capture_default_str();
            sub->add_option("--dist", opts.dist, "singular|linear|beta22|step|step4")
                ->capture_default_str();
        }
    }

    std::vector<const char*> argv;
    argv.push_back("bayestree");
    for (const auto& a : args)
        argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kBadInput;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        Runner(command, opts, in, out).run();
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kBadInput;
    } catch (const ArgumentError& e) {
        err << "error: " << e.what() << '\n';
        return kBadInput;
    } catch (const DuplicateDataError& e) {
        err << "model error: " << e.what() << '\n';
        return kModelError;
    } catch (const NotFoundError& e) {
        err << "model error: " << e.what() << '\n';
        return kModelError;
    }
    return kOk;
}

} // namespace bayestree::cli
