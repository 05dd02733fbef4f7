#include "ppreg/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ppreg {

using nlohmann::json;

namespace {

constexpr int kDatasetVersion = 1;
constexpr int kResultVersion = 1;
constexpr int kConfigVersion = 1;

json parse_json(const std::string& text, const std::string& where) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw DataError(where + ": malformed JSON");
    return j;
}

void expect_keys(const json& obj, std::initializer_list<const char*> allowed,
                 const std::string& where) {
    if (!obj.is_object()) throw DataError(where + ": expected a JSON object");
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* key : allowed) {
            if (item.key() == key) {
                ok = true;
                break;
            }
        }
        if (!ok) throw DataError(where + ": unknown key '" + item.key() + "'");
    }
}

double require_number(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || !obj[key].is_number()) {
        throw DataError(where + ": missing numeric field '" + std::string(key) + "'");
    }
    return obj[key].get<double>();
}

int require_int(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || !obj[key].is_number_integer()) {
        throw DataError(where + ": missing integer field '" + std::string(key) + "'");
    }
    return obj[key].get<int>();
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || !obj[key].is_string()) {
        throw DataError(where + ": missing string field '" + std::string(key) + "'");
    }
    return obj[key].get<std::string>();
}

void check_format(const json& obj, const char* format, int version, const std::string& where) {
    if (require_string(obj, "format", where) != format) {
        throw DataError(where + ": not a " + std::string(format) + " file");
    }
    const int v = require_int(obj, "version", where);
    if (v > version) {
        throw DataError(where + ": format version " + std::to_string(v) +
                        " is newer than the supported version " + std::to_string(version));
    }
}

json warp_to_json(const PiecewiseLinearWarp& warp) {
    return json{{"landmarks", std::vector<double>(warp.landmarks().begin(), warp.landmarks().end())},
                {"knots", std::vector<double>(warp.values().begin(), warp.values().end())}};
}

PiecewiseLinearWarp warp_from_json(const json& obj, const std::string& where) {
    expect_keys(obj, {"landmarks", "knots"}, where);
    if (!obj.contains("landmarks") || !obj.contains("knots")) {
        throw DataError(where + ": warp needs 'landmarks' and 'knots'");
    }
    return PiecewiseLinearWarp(obj["landmarks"].get<std::vector<double>>(),
                               obj["knots"].get<std::vector<double>>());
}

json model_to_json(const ModelSpec& model) {
    json out;
    if (model.is_hawkes()) {
        const HawkesParams& h = model.hawkes();
        out["family"] = "hawkes";
        out["background"] = h.background;
        std::vector<std::vector<double>> rows(h.dim(), std::vector<double>(h.dim()));
        for (std::size_t i = 0; i < h.dim(); ++i)
            for (std::size_t j = 0; j < h.dim(); ++j) rows[i][j] = h.excitation(i, j);
        out["excitation"] = rows;
        out["decay"] = h.decay;
    } else {
        const PoissonBumpModel& p = model.poisson();
        out["family"] = "poisson";
        json bumps = json::array();
        for (const PoissonBump& b : p.bumps) {
            bumps.push_back({{"onset", b.onset}, {"decay", b.decay}, {"amplitude", b.amplitude}});
        }
        out["bumps"] = bumps;
        out["replicate_period"] = p.replicate_period;
        out["replicate_count"] = p.replicate_count;
    }
    return out;
}

ModelSpec model_from_json(const json& obj, const std::string& where) {
    const std::string family = require_string(obj, "family", where);
    if (family == "hawkes") {
        expect_keys(obj, {"family", "background", "excitation", "decay"}, where);
        HawkesParams h;
        h.background = obj.at("background").get<std::vector<double>>();
        const auto rows = obj.at("excitation").get<std::vector<std::vector<double>>>();
        h.excitation = Matrix(h.background.size(), h.background.size());
        if (rows.size() != h.background.size()) throw DataError(where + ": excitation shape mismatch");
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != h.background.size()) {
                throw DataError(where + ": excitation shape mismatch");
            }
            for (std::size_t j = 0; j < rows[i].size(); ++j) h.excitation(i, j) = rows[i][j];
        }
        h.decay = require_number(obj, "decay", where);
        return ModelSpec(h);
    }
    if (family == "poisson") {
        expect_keys(obj, {"family", "bumps", "replicate_period", "replicate_count"}, where);
        PoissonBumpModel p;
        for (const json& b : obj.at("bumps")) {
            expect_keys(b, {"onset", "decay", "amplitude"}, where + " bump");
            p.bumps.push_back({require_number(b, "onset", where), require_number(b, "decay", where),
                               require_number(b, "amplitude", where)});
        }
        if (obj.contains("replicate_period")) p.replicate_period = require_number(obj, "replicate_period", where);
        if (obj.contains("replicate_count")) p.replicate_count = require_int(obj, "replicate_count", where);
        return ModelSpec(p);
    }
    throw DataError(where + ": unknown model family '" + family + "'");
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

std::string hash_hex(const std::string& text) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a(text));
    return std::string(buf);
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write to '" + path.string() + "'");
    return out;
}

void write_provenance(std::ofstream& out, const Provenance& provenance) {
    out << "# ppreg " << provenance.command << " seed=" << provenance.seed
        << " config=" << (provenance.config_hash.empty() ? "none" : provenance.config_hash)
        << "\n";
}

}  // namespace

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return std::string(buf);
}

LoadedDataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
    LoadedDataset out;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    std::vector<std::string> seen_ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path.filename().string() + ":" + std::to_string(line_no);
        const json record = parse_json(line, where);
        if (!header_seen) {
            expect_keys(record, {"format", "version", "type_count"}, where);
            check_format(record, "ppreg-dataset", kDatasetVersion, where);
            out.type_count = require_int(record, "type_count", where);
            if (out.type_count < 1) throw DataError(where + ": type_count must be >= 1");
            header_seen = true;
            continue;
        }
        expect_keys(record, {"seq_id", "T", "events", "covariate"}, where);
        const std::string id = require_string(record, "seq_id", where);
        for (const std::string& prev : seen_ids) {
            if (prev == id) throw DataError(where + ": duplicate seq_id '" + id + "'");
        }
        seen_ids.push_back(id);
        const double horizon = require_number(record, "T", where);
        if (!record.contains("events") || !record["events"].is_array()) {
            throw DataError(where + ": sequence '" + id + "' has no events array");
        }
        std::vector<Event> events;
        for (const json& e : record["events"]) {
            expect_keys(e, {"t", "c"}, where);
            const int c = require_int(e, "c", where);
            if (c < 1 || c > out.type_count) {
                throw DataError(where + ": sequence '" + id + "' uses event type " +
                                std::to_string(c) + " outside {1.." +
                                std::to_string(out.type_count) + "}");
            }
            events.push_back({require_number(e, "t", where), c - 1});
        }
        try {
            out.sequences.emplace_back(id, horizon, std::move(events));
        } catch (const DataError& err) {
            throw DataError(where + ": " + err.what());
        }
        out.covariates.push_back(record.contains("covariate")
                                     ? std::optional<double>(require_number(record, "covariate", where))
                                     : std::nullopt);
    }
    if (!header_seen) throw DataError(path.string() + ": missing dataset header record");
    return out;
}

void save_dataset(const LoadedDataset& dataset, const std::filesystem::path& path) {
    std::ofstream out = open_for_write(path);
    out << json{{"format", "ppreg-dataset"}, {"version", kDatasetVersion},
                {"type_count", dataset.type_count}}
               .dump()
        << "\n";
    for (std::size_t m = 0; m < dataset.sequences.size(); ++m) {
        const EventSequence& seq = dataset.sequences[m];
        json events = json::array();
        for (const Event& e : seq.events()) events.push_back({{"t", e.time}, {"c", e.type + 1}});
        json record{{"seq_id", seq.id()}, {"T", seq.horizon()}, {"events", events}};
        if (m < dataset.covariates.size() && dataset.covariates[m].has_value()) {
            record["covariate"] = *dataset.covariates[m];
        }
        out << record.dump() << "\n";
    }
}

void save_result(const RegistrationResult& result, const std::filesystem::path& path) {
    json out{{"format", "ppreg-result"},
             {"version", kResultVersion},
             {"model", model_to_json(result.model)},
             {"loss_trace", result.loss_trace}};
    json unwarps = json::array(), warps = json::array();
    for (const PiecewiseLinearWarp& u : result.unwarps) unwarps.push_back(warp_to_json(u));
    for (const PiecewiseLinearWarp& w : result.warps) warps.push_back(warp_to_json(w));
    out["unwarps"] = unwarps;
    out["warps"] = warps;
    // Wall-clock timings are deliberately not persisted: result files must be
    // byte-identical across reruns of the same seeded command.
    open_for_write(path) << out.dump(2) << "\n";
}

RegistrationResult load_result(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open result '" + path.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string where = path.filename().string();
    const json obj = parse_json(buffer.str(), where);
    expect_keys(obj, {"format", "version", "model", "loss_trace", "unwarps", "warps"}, where);
    check_format(obj, "ppreg-result", kResultVersion, where);
    RegistrationResult result;
    result.model = model_from_json(obj.at("model"), where);
    result.loss_trace = obj.at("loss_trace").get<std::vector<double>>();
    for (const json& u : obj.at("unwarps")) result.unwarps.push_back(warp_from_json(u, where));
    for (const json& w : obj.at("warps")) result.warps.push_back(warp_from_json(w, where));
    if (result.unwarps.size() != result.warps.size()) {
        throw DataError(where + ": unwarp/warp counts differ");
    }
    return result;
}

void save_truth(const DatasetTruth& truth, const std::filesystem::path& path) {
    json out{{"format", "ppreg-truth"}, {"version", kResultVersion},
             {"model", model_to_json(truth.model)}};
    json warps = json::array();
    for (const PiecewiseLinearWarp& w : truth.warps) warps.push_back(warp_to_json(w));
    out["warps"] = warps;
    open_for_write(path) << out.dump(2) << "\n";
}

DatasetTruth load_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open truth file '" + path.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string where = path.filename().string();
    const json obj = parse_json(buffer.str(), where);
    expect_keys(obj, {"format", "version", "model", "warps"}, where);
    check_format(obj, "ppreg-truth", kResultVersion, where);
    DatasetTruth truth{model_from_json(obj.at("model"), where), {}};
    for (const json& w : obj.at("warps")) truth.warps.push_back(warp_from_json(w, where));
    return truth;
}

namespace {

void parse_model_section(const json& obj, RunConfig& config, const std::string& where) {
    const std::string family = require_string(obj, "family", where);
    if (family == "hawkes") {
        expect_keys(obj, {"family", "type_count", "decay", "background", "excitation"}, where);
        HawkesStructure hs;
        hs.type_count = require_int(obj, "type_count", where);
        if (obj.contains("decay")) hs.decay = require_number(obj, "decay", where);
        config.structure = hs;
        if (obj.contains("background") || obj.contains("excitation")) {
            if (!obj.contains("background") || !obj.contains("excitation")) {
                throw DataError(where + ": Hawkes truth needs both background and excitation");
            }
            json model = obj;
            model.erase("type_count");
            if (!model.contains("decay")) model["decay"] = hs.decay;
            config.truth = model_from_json(model, where);
            if (config.truth->type_count() != hs.type_count) {
                throw DataError(where + ": truth parameters disagree with type_count");
            }
        }
    } else if (family == "poisson") {
        expect_keys(obj, {"family", "bumps", "replicate_period", "replicate_count"}, where);
        if (!obj.contains("bumps") || !obj["bumps"].is_array() || obj["bumps"].empty()) {
            throw DataError(where + ": poisson model needs a nonempty bumps array");
        }
        PoissonStructure ps;
        bool any_amplitude = false, all_amplitude = true;
        for (const json& b : obj["bumps"]) {
            expect_keys(b, {"onset", "decay", "amplitude"}, where + " bump");
            PoissonBump bump;
            bump.onset = require_number(b, "onset", where);
            bump.decay = require_number(b, "decay", where);
            if (b.contains("amplitude")) {
                bump.amplitude = require_number(b, "amplitude", where);
                any_amplitude = true;
            } else {
                all_amplitude = false;
            }
            ps.bumps.push_back(bump);
        }
        if (obj.contains("replicate_period")) ps.replicate_period = require_number(obj, "replicate_period", where);
        if (obj.contains("replicate_count")) ps.replicate_count = require_int(obj, "replicate_count", where);
        config.structure = ps;
        if (any_amplitude) {
            if (!all_amplitude) {
                throw DataError(where + ": give every bump an amplitude or none");
            }
            PoissonBumpModel truth;
            truth.bumps = ps.bumps;
            truth.replicate_period = ps.replicate_period;
            truth.replicate_count = ps.replicate_count;
            config.truth = ModelSpec(truth);
        }
    } else {
        throw DataError(where + ": unknown model family '" + family + "'");
    }
}

void parse_registration_section(const json& obj, RegistrationConfig& reg, const std::string& where) {
    expect_keys(obj,
                {"landmarks", "gamma", "outer_iters", "mle_max_iters", "mle_tolerance",
                 "exact_excitation", "warp_inner_rounds", "warp_pg_iters", "warp_tolerance",
                 "loss_tolerance"},
                where);
    if (obj.contains("landmarks")) reg.landmark_count = require_int(obj, "landmarks", where);
    if (obj.contains("gamma")) reg.gamma = require_number(obj, "gamma", where);
    if (obj.contains("outer_iters")) reg.outer_iters = require_int(obj, "outer_iters", where);
    if (obj.contains("mle_max_iters")) reg.mle.max_iters = require_int(obj, "mle_max_iters", where);
    if (obj.contains("mle_tolerance")) reg.mle.tolerance = require_number(obj, "mle_tolerance", where);
    if (obj.contains("exact_excitation")) {
        if (!obj["exact_excitation"].is_boolean()) throw DataError(where + ": exact_excitation must be boolean");
        reg.mle.exact_excitation = obj["exact_excitation"].get<bool>();
    }
    if (obj.contains("warp_inner_rounds")) reg.warp_solver.inner_rounds = require_int(obj, "warp_inner_rounds", where);
    if (obj.contains("warp_pg_iters")) reg.warp_solver.pg_iters = require_int(obj, "warp_pg_iters", where);
    if (obj.contains("warp_tolerance")) reg.warp_solver.tolerance = require_number(obj, "warp_tolerance", where);
    if (obj.contains("loss_tolerance")) reg.loss_tolerance = require_number(obj, "loss_tolerance", where);
}

void parse_simulate_section(const json& obj, RunConfig& config, const std::string& where) {
    expect_keys(obj,
                {"sequences", "horizon", "warp_basis", "train_fraction", "warp_resolution",
                 "identity_warps"},
                where);
    if (obj.contains("sequences")) config.sequences = require_int(obj, "sequences", where);
    if (obj.contains("horizon")) config.horizon = require_number(obj, "horizon", where);
    if (obj.contains("warp_basis")) config.warp_basis = require_int(obj, "warp_basis", where);
    if (obj.contains("train_fraction")) config.train_fraction = require_number(obj, "train_fraction", where);
    if (obj.contains("warp_resolution")) config.warp_resolution = require_int(obj, "warp_resolution", where);
    if (obj.contains("identity_warps")) {
        if (!obj["identity_warps"].is_boolean()) throw DataError(where + ": identity_warps must be boolean");
        config.identity_warps = obj["identity_warps"].get<bool>();
    }
}

void parse_experiment_section(const json& obj, RunConfig& config, const std::string& where) {
    expect_keys(obj,
                {"train_sizes", "stitch_counts", "seeds", "trials", "sequences_per_trial",
                 "train_size", "distortion_levels", "gamma_grid", "landmark_grid"},
                where);
    if (obj.contains("train_sizes")) config.train_sizes = obj["train_sizes"].get<std::vector<int>>();
    if (obj.contains("stitch_counts")) config.stitch_counts = obj["stitch_counts"].get<std::vector<int>>();
    if (obj.contains("seeds")) config.experiment_seeds = require_int(obj, "seeds", where);
    if (obj.contains("trials")) config.trials = require_int(obj, "trials", where);
    if (obj.contains("sequences_per_trial")) config.sequences_per_trial = require_int(obj, "sequences_per_trial", where);
    if (obj.contains("train_size")) config.sweep_train_size = require_int(obj, "train_size", where);
    if (obj.contains("distortion_levels")) config.distortion_levels = obj["distortion_levels"].get<std::vector<double>>();
    if (obj.contains("gamma_grid")) config.gamma_grid = obj["gamma_grid"].get<std::vector<double>>();
    if (obj.contains("landmark_grid")) config.landmark_grid = obj["landmark_grid"].get<std::vector<int>>();
}

}  // namespace

RunConfig parse_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config '" + path.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string where = path.filename().string();
    const json obj = parse_json(buffer.str(), where);
    expect_keys(obj,
                {"version", "model", "registration", "simulate", "stitch_k", "experiment",
                 "bootstrap_replicates", "data"},
                where);
    if (obj.contains("version")) {
        const int v = require_int(obj, "version", where);
        if (v > kConfigVersion) {
            throw DataError(where + ": config version " + std::to_string(v) + " is unsupported");
        }
    }

    RunConfig config;
    if (!obj.contains("model")) throw DataError(where + ": config needs a model section");
    parse_model_section(obj["model"], config, where + " model");
    if (obj.contains("registration")) {
        parse_registration_section(obj["registration"], config.registration, where + " registration");
    }
    if (obj.contains("simulate")) parse_simulate_section(obj["simulate"], config, where + " simulate");
    if (obj.contains("stitch_k")) config.stitch_k = require_int(obj, "stitch_k", where);
    if (obj.contains("experiment")) parse_experiment_section(obj["experiment"], config, where + " experiment");
    if (obj.contains("bootstrap_replicates")) {
        config.bootstrap_replicates = require_int(obj, "bootstrap_replicates", where);
    }
    if (obj.contains("data")) {
        expect_keys(obj["data"], {"train", "test"}, where + " data");
        if (obj["data"].contains("train")) config.train_path = require_string(obj["data"], "train", where);
        if (obj["data"].contains("test")) config.test_path = require_string(obj["data"], "test", where);
    }
    config.config_hash = hash_hex(obj.dump());
    return config;
}

void emit_loss_csv(std::span<const double> trace, const std::filesystem::path& path,
                   const Provenance& provenance) {
    std::ofstream out = open_for_write(path);
    write_provenance(out, provenance);
    out << "iteration,total_loss\n";
    for (std::size_t k = 0; k < trace.size(); ++k) {
        out << k << "," << format_double(trace[k]) << "\n";
    }
}

void emit_warp_csv(const PiecewiseLinearWarp& warp, const std::filesystem::path& path,
                   const Provenance& provenance, int points) {
    std::ofstream out = open_for_write(path);
    write_provenance(out, provenance);
    out << "s,warp\n";
    for (int k = 0; k < points; ++k) {
        const double s = warp.horizon() * static_cast<double>(k) / (points - 1);
        out << format_double(s) << "," << format_double(warp(s)) << "\n";
    }
}

void emit_warp_curves_csv(const RegistrationResult& result, const std::filesystem::path& path,
                          const Provenance& provenance, int points) {
    std::ofstream out = open_for_write(path);
    write_provenance(out, provenance);
    out << "seq_index,s,warp,unwarp\n";
    for (std::size_t m = 0; m < result.warps.size(); ++m) {
        for (int k = 0; k < points; ++k) {
            const double s = result.warps[m].horizon() * static_cast<double>(k) / (points - 1);
            out << m << "," << format_double(s) << "," << format_double(result.warps[m](s)) << ","
                << format_double(result.unwarps[m](s)) << "\n";
        }
    }
}

void emit_table_csv(const std::vector<std::string>& columns,
                    const std::vector<std::vector<std::string>>& rows,
                    const std::filesystem::path& path, const Provenance& provenance,
                    const std::vector<std::string>& trailing_comments) {
    std::ofstream out = open_for_write(path);
    write_provenance(out, provenance);
    for (std::size_t c = 0; c < columns.size(); ++c) {
        out << columns[c] << (c + 1 < columns.size() ? "," : "\n");
    }
    for (const std::vector<std::string>& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out << row[c] << (c + 1 < row.size() ? "," : "\n");
        }
    }
    for (const std::string& comment : trailing_comments) out << "# " << comment << "\n";
}

}  // namespace ppreg
