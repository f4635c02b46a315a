// itemval: content-validity toolkit for questionnaire items.
//
// Subcommands:
//   cvr      expert-panel content validity ratios and panel assignment
//   assign   unsupervised item-to-construct assignment from embeddings
//   embed    fetch embeddings for a questionnaire from an HTTP provider
//   pairs    build a scored sentence-pair dataset from an item pool
//   compare  accuracy tables and method agreement
//   synth    generate a synthetic ground-truth benchmark

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "itemval/itemval.hpp"

namespace fs = std::filesystem;
using namespace itemval;

namespace {

constexpr const char* kVersion = "1.0.0";

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out.flush()) throw IoError("write failed: " + path.string());
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(path + ": invalid JSON: " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Remote endpoint configuration. Precedence: command-line flags beat the
// --config file, which beats ITEMVAL_* environment variables, which beat
// the built-in defaults.

void apply_env(HttpEndpointConfig& cfg, const std::string& prefix, std::string* model) {
    auto get = [&](const char* suffix) -> const char* {
        return std::getenv((prefix + suffix).c_str());
    };
    if (const char* v = get("_BASE_URL")) cfg.base_url = v;
    if (const char* v = get("_TOKEN_ENV")) cfg.token_env = v;
    if (model)
        if (const char* v = get("_MODEL")) *model = v;
}

void apply_config_section(HttpEndpointConfig& cfg, const nlohmann::json& sec,
                          const std::string& where, std::string* model) {
    if (!sec.is_object()) throw InputError(where + ": expected a JSON object");
    for (const auto& [key, value] : sec.items()) {
        if (key == "base_url") cfg.base_url = value.get<std::string>();
        else if (key == "token_env") cfg.token_env = value.get<std::string>();
        else if (key == "batch_size") cfg.batch_size = value.get<std::size_t>();
        else if (key == "max_retries") cfg.max_retries = value.get<int>();
        else if (key == "timeout_ms") cfg.timeout_ms = value.get<int>();
        else if (key == "backoff_ms") cfg.backoff_base_ms = value.get<int>();
        else if (key == "max_in_flight") cfg.max_in_flight = value.get<std::size_t>();
        else if (key == "model" && model) *model = value.get<std::string>();
        else throw InputError(where + ": unknown key '" + key + "'");
    }
}

// Staging area for remote flags so that only flags the user actually passed
// override the config file and environment.
struct RemoteFlags {
    CLI::Option* base_url = nullptr;
    CLI::Option* model = nullptr;
    CLI::Option* batch_size = nullptr;
    CLI::Option* max_retries = nullptr;
    CLI::Option* timeout_ms = nullptr;
    CLI::Option* backoff_ms = nullptr;
    CLI::Option* max_in_flight = nullptr;
    CLI::Option* token_env = nullptr;
    std::string base_url_v, model_v, token_env_v;
    std::size_t batch_size_v = 0, max_in_flight_v = 0;
    int max_retries_v = 0, timeout_ms_v = 0, backoff_ms_v = 0;

    void add(CLI::App* cmd, bool with_model) {
        base_url = cmd->add_option("--base-url", base_url_v, "Endpoint base URL");
        if (with_model)
            model = cmd->add_option("--model", model_v, "Embedding model name");
        batch_size = cmd->add_option("--batch-size", batch_size_v, "Texts or pairs per request");
        max_retries = cmd->add_option("--max-retries", max_retries_v,
                                      "Retries after the first attempt");
        timeout_ms = cmd->add_option("--timeout-ms", timeout_ms_v, "Per-request timeout");
        backoff_ms = cmd->add_option("--backoff-ms", backoff_ms_v,
                                     "Base retry backoff (doubles per retry)");
        max_in_flight = cmd->add_option("--max-in-flight", max_in_flight_v,
                                        "Concurrent batch requests");
        token_env = cmd->add_option("--token-env", token_env_v,
                                    "Environment variable holding the bearer token");
    }

    void apply(HttpEndpointConfig& cfg, std::string* model_out) const {
        if (base_url->count()) cfg.base_url = base_url_v;
        if (model && model->count() && model_out) *model_out = model_v;
        if (batch_size->count()) cfg.batch_size = batch_size_v;
        if (max_retries->count()) cfg.max_retries = max_retries_v;
        if (timeout_ms->count()) cfg.timeout_ms = timeout_ms_v;
        if (backoff_ms->count()) cfg.backoff_base_ms = backoff_ms_v;
        if (max_in_flight->count()) cfg.max_in_flight = max_in_flight_v;
        if (token_env->count()) cfg.token_env = token_env_v;
    }
};

nlohmann::ordered_json config_to_json(const HttpEndpointConfig& cfg, const std::string* model) {
    nlohmann::ordered_json doc;
    doc["base_url"] = cfg.base_url;
    if (model) doc["model"] = *model;
    doc["batch_size"] = cfg.batch_size;
    doc["max_retries"] = cfg.max_retries;
    doc["timeout_ms"] = cfg.timeout_ms;
    doc["backoff_ms"] = cfg.backoff_base_ms;
    doc["max_in_flight"] = cfg.max_in_flight;
    doc["token_env"] = cfg.token_env;
    return doc;
}

// Resolves the effective endpoint settings for one subcommand invocation.
template <typename Config>
Config resolve_remote(Config base, const std::string& env_prefix, const std::string& section,
                      const std::string& config_path, const RemoteFlags& flags,
                      std::string* model) {
    apply_env(base, env_prefix, model);
    if (!config_path.empty()) {
        const nlohmann::json doc = load_json_file(config_path);
        if (!doc.is_object()) throw InputError(config_path + ": expected a JSON object");
        if (doc.contains(section))
            apply_config_section(base, doc[section], config_path + ": " + section, model);
        for (const auto& [key, _] : doc.items())
            if (key != "embeddings" && key != "scorer")
                throw InputError(config_path + ": unknown section '" + key + "'");
    }
    flags.apply(base, model);
    if (base.batch_size == 0) throw InputError("batch-size must be positive");
    if (base.max_retries < 0) throw InputError("max-retries must be non-negative");
    if (base.timeout_ms <= 0) throw InputError("timeout-ms must be positive");
    if (base.backoff_base_ms < 0) throw InputError("backoff-ms must be non-negative");
    return base;
}

std::pair<std::string, std::string> split_named(const std::string& spec, const char* what) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size())
        throw InputError(std::string(what) + " expects NAME=PATH, got '" + spec + "'");
    return {spec.substr(0, eq), spec.substr(eq + 1)};
}

PairFormat parse_pair_format(const std::string& s) {
    if (s == "jsonl") return PairFormat::Jsonl;
    if (s == "csv") return PairFormat::Csv;
    throw InputError("unknown pair format '" + s + "' (expected jsonl or csv)");
}

EmbeddingFormat parse_embedding_format(const std::string& s) {
    if (s == "jsonl") return EmbeddingFormat::Jsonl;
    if (s == "binary") return EmbeddingFormat::Binary;
    throw InputError("unknown embedding format '" + s + "' (expected jsonl or binary)");
}

// ---------------------------------------------------------------------------
// Subcommand bodies.

struct CvrArgs {
    std::string questionnaire, ratings, thresholds, output_dir, positive_rule = "ge1";
    double threshold_value = 0.0;
    bool has_override = false;
    bool allow_sparse = false;
};

void run_cvr(const CvrArgs& args) {
    Questionnaire q = parse_questionnaire(args.questionnaire);
    RatingSet ratings = parse_ratings(args.ratings, q, args.allow_sparse);

    std::optional<double> override_threshold;
    if (args.has_override) override_threshold = args.threshold_value;
    ThresholdTable table;
    if (!args.thresholds.empty()) table = ThresholdTable::load(args.thresholds);
    if (table.empty() && !override_threshold)
        throw InputError("provide a --thresholds table or an explicit --threshold");

    std::vector<CvrResult> results = all_cvr(ratings, q);
    ScreenResult screened = screen(results, table, override_threshold);

    fs::create_directories(args.output_dir);
    const fs::path dir(args.output_dir);
    {
        std::ofstream out(dir / "cvr.csv", std::ios::binary);
        if (!out) throw IoError("cannot write " + (dir / "cvr.csv").string());
        std::vector<CvrResult> all = screened.retained;
        all.insert(all.end(), screened.rejected.begin(), screened.rejected.end());
        std::sort(all.begin(), all.end(), [&](const CvrResult& a, const CvrResult& b) {
            const auto ia = *q.item_index(a.item_id), ib = *q.item_index(b.item_id);
            if (ia != ib) return ia < ib;
            return *q.construct_index(a.construct_id) < *q.construct_index(b.construct_id);
        });
        write_cvr_csv(out, all);
    }

    std::vector<PanelAssignment> assignments =
        panel_assign(ratings, q, parse_positive_rule(args.positive_rule));
    {
        std::ofstream out(dir / "panel_assignments.csv", std::ios::binary);
        if (!out) throw IoError("cannot write " + (dir / "panel_assignments.csv").string());
        write_panel_assignments_csv(out, assignments, q);
    }
    const AccuracyReport report = panel_accuracy(assignments, q);
    write_file(dir / "panel_accuracy.json", report.to_json().dump(2) + "\n");
    write_file(dir / "panel_grid.csv", assignment_grid_csv(grid_entries(assignments, q), q));

    std::cout << "panel: " << ratings.panel_size() << " experts, " << q.items.size()
              << " items; retained " << screened.retained.size() << " of "
              << (screened.retained.size() + screened.rejected.size())
              << " item-construct pairs; panel macro accuracy " << format_percent(report.macro)
              << "%\n";
}

struct AssignArgs {
    std::string questionnaire, embeddings, output_dir, config_path;
    double temperature = 1.0;
    bool fetch = false;
    bool svg = false;
    bool print_config = false;
};

void run_assign(const AssignArgs& args, const RemoteFlags& flags) {
    ProviderConfig provider;
    provider = resolve_remote(provider, "ITEMVAL_EMBEDDINGS", "embeddings", args.config_path,
                              flags, &provider.model_name);
    if (args.print_config) {
        std::cout << config_to_json(provider, &provider.model_name).dump(2) << "\n";
        return;
    }
    if (args.embeddings.empty() == !args.fetch)
        throw InputError("provide exactly one of --embeddings or --fetch");

    Questionnaire q = parse_questionnaire(args.questionnaire);
    EmbeddingMatrix m;
    if (args.fetch) {
        RetryStats stats;
        m = fetch_embeddings(provider, q, &stats);
        if (stats.retries)
            std::cerr << "itemval: embeddings fetched with " << stats.retries << " retries\n";
    } else {
        m = load_embeddings(args.embeddings);
    }

    std::vector<ConstructAssignment> assignments = assign(m, q, args.temperature);
    const AccuracyReport report = accuracy(assignments, q);

    fs::create_directories(args.output_dir);
    const fs::path dir(args.output_dir);
    {
        std::ofstream out(dir / "assignments.csv", std::ios::binary);
        if (!out) throw IoError("cannot write " + (dir / "assignments.csv").string());
        write_assignments_csv(out, assignments, q);
    }
    write_file(dir / "accuracy.json", report.to_json().dump(2) + "\n");
    write_file(dir / "assignment_grid.csv", assignment_grid_csv(grid_entries(assignments, q), q));
    write_file(dir / "radar.json", radar_json(report).dump(2) + "\n");
    if (args.svg) write_file(dir / "radar.svg", radar_svg(report));

    std::cout << "assigned " << q.items.size() << " items; macro accuracy "
              << format_percent(report.macro) << "%, micro accuracy "
              << format_percent(report.micro.value_or(0.0)) << "%\n";
}

struct EmbedArgs {
    std::string questionnaire, output, format = "jsonl", config_path;
    bool print_config = false;
};

void run_embed(const EmbedArgs& args, const RemoteFlags& flags) {
    ProviderConfig provider;
    provider = resolve_remote(provider, "ITEMVAL_EMBEDDINGS", "embeddings", args.config_path,
                              flags, &provider.model_name);
    if (args.print_config) {
        std::cout << config_to_json(provider, &provider.model_name).dump(2) << "\n";
        return;
    }
    Questionnaire q = parse_questionnaire(args.questionnaire);
    RetryStats stats;
    EmbeddingMatrix m = fetch_embeddings(provider, q, &stats);
    save_embeddings(m, args.output, parse_embedding_format(args.format));
    std::cout << "fetched " << m.rows() << " embeddings of dimension " << m.dim << " ("
              << stats.requests << " requests, " << stats.retries << " retries)\n";
}

struct PairsArgs {
    std::string pool, output, format = "jsonl", config_path;
    std::size_t batch_size_records = 0; // 0 = use scorer batch size
    bool resume = false;
    bool count_only = false;
    bool print_config = false;
};

void run_pairs(const PairsArgs& args, const RemoteFlags& flags) {
    ScorerConfig scorer_cfg;
    scorer_cfg = resolve_remote(scorer_cfg, "ITEMVAL_SCORER", "scorer", args.config_path, flags,
                                nullptr);
    if (args.print_config) {
        std::cout << config_to_json(scorer_cfg, nullptr).dump(2) << "\n";
        return;
    }
    ItemPool pool = parse_pool(args.pool);
    if (args.count_only) {
        std::cout << count_pairs(pool.size(), 2) << "\n";
        return;
    }
    if (args.output.empty()) throw InputError("pairs needs --output (or --count-only)");

    PairRunOptions opt;
    opt.output_path = args.output;
    opt.format = parse_pair_format(args.format);
    opt.batch_size = scorer_cfg.batch_size;
    opt.resume = args.resume;

    RetryStats stats;
    DatasetSummary summary = run_pair_dataset(pool, make_http_scorer(scorer_cfg, &stats), opt);
    write_file(args.output + ".summary.json", summary.to_json().dump(2) + "\n");
    std::cout << "wrote " << summary.records_written << " scored pairs to " << args.output
              << " (" << stats.requests << " requests, " << stats.retries << " retries)\n";
}

struct CompareArgs {
    std::string name = "comparison";
    std::vector<std::string> methods;     // NAME=accuracy.json
    std::vector<std::string> assignments; // NAME=assignments.csv (exactly 0 or 2)
    std::string output_dir;
};

void run_compare(const CompareArgs& args) {
    if (args.methods.empty()) throw InputError("compare needs at least one --method NAME=PATH");
    std::vector<MethodResult> methods;
    for (const auto& spec : args.methods) {
        auto [name, path] = split_named(spec, "--method");
        methods.push_back({name, AccuracyReport::from_json(load_json_file(path), path)});
    }
    ComparisonTable table = ComparisonTable::build(args.name, std::move(methods));

    fs::create_directories(args.output_dir);
    const fs::path dir(args.output_dir);
    const std::string markdown = table.render(TableFormat::Markdown);
    write_file(dir / "comparison.md", markdown);
    write_file(dir / "comparison.csv", table.render(TableFormat::Csv));
    std::cout << markdown;

    if (!args.assignments.empty()) {
        if (args.assignments.size() != 2)
            throw InputError("agreement needs exactly two --assignments NAME=PATH inputs");
        auto [name_a, path_a] = split_named(args.assignments[0], "--assignments");
        auto [name_b, path_b] = split_named(args.assignments[1], "--assignments");
        AgreementReport rep =
            agreement(read_assignments_csv(path_a), read_assignments_csv(path_b));
        nlohmann::ordered_json doc;
        doc["methods"] = {name_a, name_b};
        doc.update(rep.to_json());
        write_file(dir / "agreement.json", doc.dump(2) + "\n");
        std::cout << "agreement between " << name_a << " and " << name_b << ": "
                  << format_percent(rep.observed) << "% on " << rep.items << " items\n";
    }
}

struct SynthArgs {
    std::size_t constructs = 5, items = 10, dim = 768;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    std::string format = "jsonl", output_dir;
};

void run_synth(const SynthArgs& args) {
    SynthSpec spec;
    spec.constructs = args.constructs;
    spec.items_per_construct = args.items;
    spec.dim = args.dim;
    spec.sigma = args.sigma;
    spec.seed = args.seed;
    SynthResult result = synthesize(spec);

    fs::create_directories(args.output_dir);
    const fs::path dir(args.output_dir);
    write_file(dir / "questionnaire.json", serialize_questionnaire(result.questionnaire));
    const EmbeddingFormat fmt = parse_embedding_format(args.format);
    const fs::path emb = dir / (fmt == EmbeddingFormat::Jsonl ? "embeddings.jsonl"
                                                              : "embeddings.bin");
    save_embeddings(result.embeddings, emb.string(), fmt);
    std::cout << "synthesized " << result.questionnaire.items.size() << " items across "
              << args.constructs << " constructs (dim " << args.dim << ", sigma "
              << format_double(args.sigma) << ", seed " << args.seed << ")\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"content validity toolkit for questionnaire items"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CvrArgs cvr_args;
    CLI::App* cvr_cmd = app.add_subcommand("cvr", "expert-panel content validity ratios");
    cvr_cmd->add_option("-q,--questionnaire", cvr_args.questionnaire, "Questionnaire JSON or CSV")
        ->required();
    cvr_cmd->add_option("-r,--ratings", cvr_args.ratings, "Ratings CSV")->required();
    cvr_cmd->add_option("-t,--thresholds", cvr_args.thresholds, "Critical value table JSON");
    CLI::Option* cvr_override =
        cvr_cmd->add_option("--threshold", cvr_args.threshold_value, "Fixed CVR threshold");
    cvr_cmd->add_option("--positive-rule", cvr_args.positive_rule,
                        "Vote rule for panel assignment: ge1 or eq2");
    cvr_cmd->add_flag("--allow-sparse", cvr_args.allow_sparse,
                      "Treat missing rating cells as 0");
    cvr_cmd->add_option("-o,--output-dir", cvr_args.output_dir, "Output directory")->required();

    AssignArgs assign_args;
    RemoteFlags assign_flags;
    CLI::App* assign_cmd = app.add_subcommand("assign", "assign items to constructs");
    assign_cmd->add_option("-q,--questionnaire", assign_args.questionnaire,
                           "Questionnaire JSON or CSV")->required();
    assign_cmd->add_option("-e,--embeddings", assign_args.embeddings,
                           "Embeddings file (JSONL or binary)");
    assign_cmd->add_flag("--fetch", assign_args.fetch, "Fetch embeddings from the provider");
    assign_cmd->add_option("--temperature", assign_args.temperature, "Softmax temperature");
    assign_cmd->add_flag("--svg", assign_args.svg, "Also write radar.svg");
    assign_cmd->add_option("--config", assign_args.config_path, "Config file JSON");
    assign_cmd->add_flag("--print-config", assign_args.print_config,
                         "Print the effective provider config and exit");
    assign_cmd->add_option("-o,--output-dir", assign_args.output_dir, "Output directory");
    assign_flags.add(assign_cmd, true);

    EmbedArgs embed_args;
    RemoteFlags embed_flags;
    CLI::App* embed_cmd = app.add_subcommand("embed", "fetch and store embeddings");
    embed_cmd->add_option("-q,--questionnaire", embed_args.questionnaire,
                          "Questionnaire JSON or CSV")->required();
    embed_cmd->add_option("-o,--output", embed_args.output, "Output embeddings file");
    embed_cmd->add_option("--format", embed_args.format, "Output format: jsonl or binary");
    embed_cmd->add_option("--config", embed_args.config_path, "Config file JSON");
    embed_cmd->add_flag("--print-config", embed_args.print_config,
                        "Print the effective provider config and exit");
    embed_flags.add(embed_cmd, true);

    PairsArgs pairs_args;
    RemoteFlags pairs_flags;
    CLI::App* pairs_cmd = app.add_subcommand("pairs", "build a scored sentence-pair dataset");
    pairs_cmd->add_option("--pool", pairs_args.pool, "Item pool CSV (id,text)")->required();
    pairs_cmd->add_option("-o,--output", pairs_args.output, "Output dataset path");
    pairs_cmd->add_option("--format", pairs_args.format, "Output format: jsonl or csv");
    pairs_cmd->add_flag("--resume", pairs_args.resume, "Resume from a checkpoint");
    pairs_cmd->add_flag("--count-only", pairs_args.count_only,
                        "Print the total pair count and exit");
    pairs_cmd->add_option("--config", pairs_args.config_path, "Config file JSON");
    pairs_cmd->add_flag("--print-config", pairs_args.print_config,
                        "Print the effective scorer config and exit");
    pairs_flags.add(pairs_cmd, false);

    CompareArgs compare_args;
    CLI::App* compare_cmd = app.add_subcommand("compare", "compare method accuracies");
    compare_cmd->add_option("--name", compare_args.name, "Table title");
    compare_cmd->add_option("--method", compare_args.methods,
                            "NAME=accuracy.json (repeatable)");
    compare_cmd->add_option("--assignments", compare_args.assignments,
                            "NAME=assignments.csv (exactly two, for agreement)");
    compare_cmd->add_option("-o,--output-dir", compare_args.output_dir, "Output directory")
        ->required();

    SynthArgs synth_args;
    CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic benchmark");
    synth_cmd->add_option("--constructs", synth_args.constructs, "Number of constructs");
    synth_cmd->add_option("--items", synth_args.items, "Items per construct");
    synth_cmd->add_option("--dim", synth_args.dim, "Embedding dimension");
    synth_cmd->add_option("--sigma", synth_args.sigma, "Noise level around centroids");
    synth_cmd->add_option("--seed", synth_args.seed, "RNG seed");
    synth_cmd->add_option("--format", synth_args.format, "Embedding format: jsonl or binary");
    synth_cmd->add_option("-o,--output-dir", synth_args.output_dir, "Output directory")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help / --version
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(cvr_cmd)) {
            cvr_args.has_override = cvr_override->count() > 0;
            run_cvr(cvr_args);
        } else if (app.got_subcommand(assign_cmd)) {
            if (!assign_args.print_config && assign_args.output_dir.empty())
                throw InputError("assign needs --output-dir");
            run_assign(assign_args, assign_flags);
        } else if (app.got_subcommand(embed_cmd)) {
            if (!embed_args.print_config && embed_args.output.empty())
                throw InputError("embed needs --output");
            run_embed(embed_args, embed_flags);
        } else if (app.got_subcommand(pairs_cmd)) {
            run_pairs(pairs_args, pairs_flags);
        } else if (app.got_subcommand(compare_cmd)) {
            run_compare(compare_args);
        } else if (app.got_subcommand(synth_cmd)) {
            run_synth(synth_args);
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const RuntimeFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
