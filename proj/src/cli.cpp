#include "sem/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sem/bound.hpp"
#include "sem/csv.hpp"
#include "sem/data.hpp"
#include "sem/probe.hpp"
#include "sem/relevance.hpp"
#include "sem/sem.hpp"
#include "sem/ssl.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sem {
namespace {

struct DataOptions {
    std::string kind = "synth";
    std::string path;
    std::string class_names_file;
    ClusterParams clusters;
};

json to_json(const DataOptions& d) {
    return {{"kind", d.kind},
            {"path", d.path},
            {"class_names_file", d.class_names_file},
            {"n_classes", d.clusters.n_classes},
            {"samples_per_class", d.clusters.samples_per_class},
            {"dim", d.clusters.dim},
            {"spread", d.clusters.spread},
            {"mean_scale", d.clusters.mean_scale},
            {"seed", d.clusters.seed}};
}

DataOptions data_from_json(const json& j) {
    DataOptions d;
    d.kind = j.at("kind").get<std::string>();
    d.path = j.at("path").get<std::string>();
    d.class_names_file = j.at("class_names_file").get<std::string>();
    d.clusters.n_classes = j.at("n_classes").get<int>();
    d.clusters.samples_per_class = j.at("samples_per_class").get<int>();
    d.clusters.dim = j.at("dim").get<Index>();
    d.clusters.spread = j.at("spread").get<Scalar>();
    d.clusters.mean_scale = j.at("mean_scale").get<Scalar>();
    d.clusters.seed = j.at("seed").get<std::uint64_t>();
    return d;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

DatasetHandle load_data(const DataOptions& d) {
    DatasetHandle ds;
    if (d.kind == "synth") {
        ds = synth_clusters(d.clusters);
    } else if (d.kind == "cifar") {
        ds = load_cifar_binary(d.path);
    } else {
        throw ParameterError("unknown dataset kind '" + d.kind + "'");
    }
    if (!d.class_names_file.empty()) {
        std::vector<std::string> names = read_lines(d.class_names_file);
        if (static_cast<int>(names.size()) < ds.num_classes) throw DataError("class name file is too short");
        ds.num_classes = static_cast<int>(names.size());
        if (ds.superclasses) ds.superclasses->class_names = names;
    }
    return ds;
}

std::vector<std::string> class_names(const DatasetHandle& ds, const DataOptions& d) {
    if (!d.class_names_file.empty()) return read_lines(d.class_names_file);
    if (ds.superclasses) return ds.superclasses->class_names;
    std::vector<std::string> names;
    for (int c = 0; c < ds.num_classes; ++c) names.push_back("class_" + std::to_string(c));
    return names;
}

fs::path output_dir(const std::string& flag, const std::string& subcommand) {
    fs::path dir;
    if (!flag.empty()) {
        dir = flag;
    } else {
        const char* root = std::getenv("SEM_OUTPUT_ROOT");
        dir = fs::path(root && *root ? root : "runs") / subcommand;
    }
    fs::create_directories(dir);
    return dir;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot write " + p.string());
    return f;
}

void write_json(const fs::path& p, const json& j) { open_out(p) << j.dump(2) << '\n'; }

// Resolved option values in the config-file format. The config option itself
// and unset values are left out so the file can be fed back through --config.
void write_snapshot(const CLI::App& app, const fs::path& dir) {
    std::istringstream all(app.config_to_str(true, false));
    std::ofstream f = open_out(dir / "config.txt");
    for (std::string line; std::getline(all, line);) {
        if (line.rfind("config=", 0) == 0 || line.ends_with("=\"\"") || line.ends_with("=\"{}\"")) continue;
        f << line << '\n';
    }
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// Values of one config line. A quoted value is kept whole; otherwise list
// brackets are dropped and commas or blanks separate items.
std::vector<std::string> config_values(std::string v) {
    v = trim(v);
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
        v = v.substr(1, v.size() - 2);
        if (v.empty() || v.front() != '[') return {v};
    }
    if (v.size() >= 2 && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
    std::replace(v.begin(), v.end(), ',', ' ');
    std::vector<std::string> out;
    std::istringstream items(v);
    for (std::string item; items >> item;) {
        if (item.size() >= 2 && item.front() == '"' && item.back() == '"') item = item.substr(1, item.size() - 2);
        out.push_back(item);
    }
    return out;
}

// Expands `--config FILE` into option tokens placed right after the
// subcommand. Keys also given on the command line keep the command-line value.
std::vector<std::string> merge_config(std::vector<std::string> args) {
    std::string path;
    std::set<std::string> given;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a.rfind("--", 0) != 0) continue;
        const std::string name = a.substr(2, a.find('=') - 2);
        given.insert(name);
        if (name == "config") {
            if (a.find('=') != std::string::npos) {
                path = a.substr(a.find('=') + 1);
            } else if (i + 1 < args.size()) {
                path = args[i + 1];
            }
        }
    }
    if (path.empty()) return args;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    std::vector<std::string> injected;
    for (std::string line; std::getline(in, line);) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty() || line.front() == '[') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("config line without '=': " + line);
        const std::string key = trim(line.substr(0, eq));
        if (key.empty() || given.count(key)) continue;
        const std::vector<std::string> values = config_values(line.substr(eq + 1));
        if (values.empty()) continue;
        if (values.size() == 1) {
            injected.push_back("--" + key + "=" + values[0]);
        } else {
            injected.push_back("--" + key);
            injected.insert(injected.end(), values.begin(), values.end());
        }
    }
    const auto sub = std::find_if(args.begin(), args.end(), [](const std::string& a) { return a.rfind("-", 0) != 0; });
    const auto at = sub == args.end() ? args.end() : sub + 1;
    args.insert(at, injected.begin(), injected.end());
    return args;
}

struct Run {
    std::string method;
    Mlp encoder;
    SemConfig sem;
    DataOptions data;
    std::uint64_t seed = 0;
};

Run load_run(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
    Run r;
    r.method = j.at("method").get<std::string>();
    r.data = data_from_json(j.at("dataset"));
    r.seed = j.at("seed").get<std::uint64_t>();
    const json& state = j.at("state");
    if (r.method == "byol") {
        ByolState s = byol_from_json(state);
        r.encoder = s.online.encoder;
        r.sem = s.online_sem;
    } else if (r.method == "nce") {
        NceState s = nce_from_json(state);
        r.encoder = s.online.encoder;
        r.sem = s.sem;
    } else {
        throw FormatError("unknown method in checkpoint");
    }
    return r;
}

void add_data_options(CLI::App* app, DataOptions& d) {
    app->add_option("--dataset", d.kind, "synth or cifar")->check(CLI::IsMember({"synth", "cifar"}));
    app->add_option("--data-path", d.path, "CIFAR binary file");
    app->add_option("--class-names", d.class_names_file, "one class name per line");
    app->add_option("--classes", d.clusters.n_classes, "synthetic classes");
    app->add_option("--samples-per-class", d.clusters.samples_per_class, "synthetic samples per class");
    app->add_option("--dim", d.clusters.dim, "synthetic feature dimension");
    app->add_option("--spread", d.clusters.spread, "synthetic within-class standard deviation");
    app->add_option("--mean-scale", d.clusters.mean_scale, "synthetic class mean scale");
    app->add_option("--data-seed", d.clusters.seed, "synthetic data seed");
}

struct TrainOptions {
    std::string method = "byol";
    DataOptions data;
    EncoderSpec enc;
    SemConfig sem;
    std::optional<Scalar> tau_target;
    HeadSpec head;
    TrainConfig train;
    std::size_t queue = 256;
    Scalar nce_temperature = 0.2;
    bool literal_nce = false;
    std::string out;
};

void run_train(const CLI::App& app, const TrainOptions& o, std::ostream& out) {
    const fs::path dir = output_dir(o.out, "train");
    write_snapshot(app, dir);
    DatasetHandle ds = load_data(o.data);
    EncoderSpec enc = o.enc;
    enc.input_dim = ds.dim();
    TrainResult result;
    json state;
    if (o.method == "byol") {
        SemConfig target = o.sem;
        if (o.tau_target) target.tau = *o.tau_target;
        ByolState s = make_byol_state(enc, o.sem, target, o.head, o.train);
        result = train_byol(s, ds, o.train);
        state = sem::to_json(s);
    } else {
        NceState s = make_nce_state(enc, o.sem, o.head, o.train, o.queue, o.nce_temperature);
        s.include_positive = !o.literal_nce;
        result = train_nce(s, ds, o.train);
        state = sem::to_json(s);
    }
    {
        std::ofstream f = open_out(dir / "losses.csv");
        CsvWriter csv(f);
        csv.row({"step", "loss"});
        for (std::size_t i = 0; i < result.losses.size(); ++i) {
            csv.row({std::to_string(i), format_double(result.losses[i])});
        }
    }
    write_json(dir / "checkpoint.json", {{"method", o.method},
                                         {"seed", o.train.seed},
                                         {"dataset", to_json(o.data)},
                                         {"provenance", ds.provenance},
                                         {"state", state}});
    out << json{{"steps", result.losses.size()},
                {"initial_loss", result.losses.front()},
                {"final_loss", result.losses.back()},
                {"out", dir.string()}}
               .dump()
        << '\n';
}

struct ProbeOptions {
    std::string checkpoint;
    std::string mode = "sem";
    std::optional<Scalar> tau;
    std::vector<Scalar> taus{0.01, 0.1, 1.0, 10.0};
    bool no_base = false;
    ProbeConfig probe;
    Scalar train_fraction = 0.8;
    std::string out;
};

void add_probe_options(CLI::App* app, ProbeOptions& o) {
    app->add_option("--checkpoint", o.checkpoint, "checkpoint written by train")->required();
    app->add_option("--epochs", o.probe.epochs, "full-batch probe epochs");
    app->add_option("--lr", o.probe.learning_rate, "probe step size");
    app->add_option("--weight-decay", o.probe.weight_decay, "probe weight decay");
    app->add_option("--seed", o.probe.seed, "probe seed");
    app->add_option("--train-fraction", o.train_fraction, "train share of the split");
}

void run_probe(const CLI::App& app, const ProbeOptions& o, std::ostream& out) {
    const fs::path dir = output_dir(o.out, "probe");
    write_snapshot(app, dir);
    const Run run = load_run(o.checkpoint);
    const DatasetHandle ds = load_data(run.data);
    const DatasetSplit split = split_dataset(ds, o.train_fraction, o.probe.seed);
    SemConfig shape = run.sem;
    if (o.tau) shape.tau = *o.tau;
    const FeatureMode mode = o.mode == "base" ? FeatureMode::base : FeatureMode::sem;
    const Matrix train = extract_features(run.encoder, split.train.features, mode, shape);
    const Matrix val = extract_features(run.encoder, split.validation.features, mode, shape);
    const LinearProbe p = train_probe(train, split.train.labels, ds.num_classes, o.probe);

    const std::vector<std::string> names = class_names(ds, run.data);
    {
        std::ofstream f = open_out(dir / "probe_weights.csv");
        write_weights_csv(f, WeightTable{p.W, names});
    }
    if (ds.superclasses) {
        std::ofstream f = open_out(dir / "superclasses.txt");
        CsvWriter csv(f);
        for (std::size_t c = 0; c < names.size(); ++c) {
            csv.row({names[c], ds.superclasses->super_names.at(
                                   static_cast<std::size_t>(ds.superclasses->class_to_super.at(c)))});
        }
    }
    json report = {{"mode", o.mode},
                   {"train_accuracy", evaluate(p, train, split.train.labels)},
                   {"validation_accuracy", evaluate(p, val, split.validation.labels)},
                   {"initial_loss", p.initial_loss},
                   {"final_loss", p.final_loss},
                   {"epochs", p.epochs_run}};
    if (mode == FeatureMode::sem) report["tau"] = shape.tau;
    write_json(dir / "probe.json", report);
    out << report.dump() << '\n';
}

void run_sweep(const CLI::App& app, const ProbeOptions& o, std::ostream& out) {
    const fs::path dir = output_dir(o.out, "sweep");
    write_snapshot(app, dir);
    const Run run = load_run(o.checkpoint);
    const DatasetSplit split = split_dataset(load_data(run.data), o.train_fraction, o.probe.seed);
    ProbeConfig cfg = o.probe;
    cfg.tau_sweep = o.taus;
    cfg.include_base = !o.no_base;
    const auto rows = tau_sweep(run.encoder, run.sem, split, cfg);
    std::ofstream f = open_out(dir / "sweep.csv");
    write_sweep_csv(f, rows);
    json j = json::array();
    for (const SweepRow& r : rows) {
        json row = {{"mode", r.mode}, {"accuracy", r.accuracy}};
        if (r.mode == "sem") row["tau"] = r.tau;
        j.push_back(row);
    }
    out << j.dump() << '\n';
}

struct EntropyOptions {
    std::string checkpoint;
    int bins = 50;
    std::optional<Scalar> tau;
    std::string out;
};

void run_entropy(const CLI::App& app, const EntropyOptions& o, std::ostream& out) {
    const fs::path dir = output_dir(o.out, "entropy-hist");
    write_snapshot(app, dir);
    const Run run = load_run(o.checkpoint);
    const DatasetHandle ds = load_data(run.data);
    SemConfig shape = run.sem;
    if (o.tau) shape.tau = *o.tau;
    const SimplexStats stats = entropy_histogram(run.encoder.infer(ds.features), shape, o.bins);
    {
        std::ofstream f = open_out(dir / "entropy_histogram.csv");
        write_histogram_csv(f, stats.histogram);
    }
    std::vector<Scalar> sorted = stats.entropies;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    const Scalar median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    Scalar mean = 0.0;
    for (Scalar e : sorted) mean += e / static_cast<Scalar>(m);
    const json report = {{"tau", shape.tau},  {"L", shape.L},
                         {"V", shape.V},      {"simplices", m},
                         {"median", median},  {"mean", mean},
                         {"max_entropy", std::log(static_cast<Scalar>(shape.V))},
                         {"delta_hat", stats.delta_hat}};
    write_json(dir / "entropy.json", report);
    out << report.dump() << '\n';
}

struct BoundOptions {
    BoundConfig cfg;
    std::string checkpoint;
    std::string out;
};

void run_bound(const CLI::App& app, BoundOptions o, std::ostream& out) {
    const fs::path dir = output_dir(o.out, "bound");
    write_snapshot(app, dir);
    if (!o.checkpoint.empty()) {
        // Shape, sample count and gap come from the trained encoder.
        const Run run = load_run(o.checkpoint);
        const DatasetHandle ds = load_data(run.data);
        o.cfg.L = run.sem.L;
        o.cfg.V = run.sem.V;
        o.cfg.n = ds.size();
        o.cfg.delta = entropy_histogram(run.encoder.infer(ds.features), run.sem).delta_hat;
    }
    const BoundReport report = compute_bound_report(o.cfg);
    json j = sem::to_json(report);
    BoundConfig scan_cfg = o.cfg;
    std::sort(scan_cfg.taus.begin(), scan_cfg.taus.end(), std::greater<>());
    scan_cfg.taus.erase(std::unique(scan_cfg.taus.begin(), scan_cfg.taus.end()), scan_cfg.taus.end());
    const Lemma5Scan scan = lemma5_scan(scan_cfg);
    json rows = json::array();
    for (const Lemma5Row& r : scan.rows) rows.push_back({{"tau", r.tau}, {"bound", r.bound}});
    j["lemma5"] = {{"rows", rows},
                   {"epsilon", o.cfg.lemma5_epsilon},
                   {"final_below_epsilon", scan.final_below_epsilon},
                   {"monotone_decreasing", scan.monotone_decreasing}};
    write_json(dir / "bound.json", j);
    std::ofstream f = open_out(dir / "bound.csv");
    write_bound_csv(f, report);
    out << j.dump() << '\n';
}

struct RelevanceOptions {
    std::string weights;
    std::string superclasses;
    std::vector<Index> K;
    bool abs_weights = false;
    std::string out;
};

void run_relevance(const CLI::App& app, const RelevanceOptions& o, std::ostream& out) {
    const fs::path dir = output_dir(o.out, "relevance");
    write_snapshot(app, dir);
    std::ifstream win(o.weights);
    if (!win) throw IoError("cannot open " + o.weights);
    const WeightTable table = read_weights_csv(win);
    std::ifstream sin(o.superclasses);
    if (!sin) throw IoError("cannot open " + o.superclasses);
    const SuperclassMap supers = SuperclassMap::parse(sin, table.class_names);

    std::vector<Index> grid = o.K;
    if (grid.empty()) {
        for (Index k = 1; k <= std::min<Index>(10, table.W.rows()); ++k) grid.push_back(k);
    }
    json summaries = json::array();
    std::ofstream f = open_out(dir / "relevance.csv");
    CsvWriter csv(f);
    csv.row({"K", "n_edges", "n_components", "relevance"});
    for (Index k : grid) {
        const RelevanceGraph g = build_wk(table.W, k, o.abs_weights);
        const Scalar score = relevance_score(g, supers);
        {
            std::ofstream e = open_out(dir / ("edges_K" + std::to_string(k) + ".csv"));
            export_graph(e, g, table.class_names);
            std::ofstream c = open_out(dir / ("components_K" + std::to_string(k) + ".csv"));
            export_components(c, g, table.class_names);
        }
        csv.row({std::to_string(k), std::to_string(g.edges.size()), std::to_string(g.components.size()),
                 format_double(score)});
        summaries.push_back(relevance_summary(g, score));
    }
    write_json(dir / "relevance.json", summaries);
    out << summaries.dump() << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Simplicial embedding experiments", "sem"};
    app.require_subcommand(1);
    app.fallthrough(false);
    app.option_defaults()->always_capture_default();

    TrainOptions train;
    CLI::App* t = app.add_subcommand("train", "self-supervised training with a SEM layer");
    t->add_option("--out", train.out, "output directory");
    t->add_option("--method", train.method, "byol or nce")->check(CLI::IsMember({"byol", "nce"}));
    add_data_options(t, train.data);
    t->add_option("--hidden", train.enc.hidden, "encoder hidden widths");
    t->add_option("--batch-norm", train.enc.batch_norm, "batch norm in hidden layers");
    t->add_option("--L", train.sem.L, "number of simplices");
    t->add_option("--V", train.sem.V, "simplex dimension");
    t->add_option("--tau", train.sem.tau, "SEM temperature of the online branch");
    t->add_option("--tau-target", train.tau_target, "SEM temperature of the target branch");
    t->add_option("--projection-dim", train.head.projection_dim, "projector output width");
    t->add_option("--projector-hidden", train.head.projector_hidden, "projector hidden widths");
    t->add_option("--predictor-hidden", train.head.predictor_hidden, "predictor hidden width");
    t->add_option("--lr", train.train.base_lr, "base learning rate");
    t->add_option("--weight-decay", train.train.weight_decay, "weight decay");
    t->add_option("--epochs", train.train.epochs, "epochs");
    t->add_option("--steps", train.train.steps, "total steps, overrides epochs when positive");
    t->add_option("--batch-size", train.train.batch_size, "batch size");
    t->add_option("--cosine", train.train.cosine_decay, "cosine learning-rate decay");
    t->add_option("--seed", train.train.seed, "training seed");
    t->add_option("--ema", train.train.ema_rate, "target EMA rate");
    t->add_option("--queue", train.queue, "negative queue capacity (nce)");
    t->add_option("--nce-temperature", train.nce_temperature, "InfoNCE temperature (nce)");
    t->add_flag("--literal-nce", train.literal_nce, "leave the positive out of the InfoNCE denominator");
    AugmentParams& aug = train.train.augment;
    t->add_option("--crop-min", aug.crop_min_scale, "smallest crop scale");
    t->add_option("--flip-prob", aug.flip_prob, "horizontal flip probability");
    t->add_option("--brightness", aug.brightness, "brightness jitter");
    t->add_option("--contrast", aug.contrast, "contrast jitter");
    t->add_option("--noise-std", aug.noise_std, "additive noise standard deviation");
    t->add_option("--feature-drop", aug.feature_drop, "feature dropout probability (vectors)");
    t->add_option("--scale-jitter", aug.scale_jitter, "feature scale jitter (vectors)");

    ProbeOptions probe;
    CLI::App* p = app.add_subcommand("probe", "linear probe on frozen features");
    p->add_option("--out", probe.out, "output directory");
    add_probe_options(p, probe);
    p->add_option("--mode", probe.mode, "base or sem")->check(CLI::IsMember({"base", "sem"}));
    p->add_option("--tau", probe.tau, "SEM temperature of the probe features");

    ProbeOptions sweep;
    CLI::App* s = app.add_subcommand("sweep", "probe accuracy across SEM temperatures");
    s->add_option("--out", sweep.out, "output directory");
    add_probe_options(s, sweep);
    s->add_option("--taus", sweep.taus, "probe temperatures");
    s->add_flag("--no-base", sweep.no_base, "skip the raw-feature probe");

    EntropyOptions entropy;
    CLI::App* e = app.add_subcommand("entropy-hist", "per-simplex entropy histogram");
    e->add_option("--out", entropy.out, "output directory");
    e->add_option("--checkpoint", entropy.checkpoint, "checkpoint written by train")->required();
    e->add_option("--bins", entropy.bins, "histogram bins");
    e->add_option("--tau", entropy.tau, "override the SEM temperature");

    BoundOptions bound;
    CLI::App* b = app.add_subcommand("bound", "complexity terms of the generalisation bound");
    b->add_option("--out", bound.out, "output directory");
    b->add_option("--n", bound.cfg.n, "sample count");
    b->add_option("--L", bound.cfg.L, "number of simplices");
    b->add_option("--V", bound.cfg.V, "simplex dimension");
    b->add_option("--delta", bound.cfg.delta, "logit gap");
    b->add_option("--tau", bound.cfg.taus, "SEM temperatures");
    b->add_option("--mc-samples", bound.cfg.mc_samples, "Monte Carlo pairs per temperature");
    b->add_option("--seed", bound.cfg.seed, "Monte Carlo seed");
    b->add_option("--R", bound.cfg.R, "Lipschitz constant of the loss");
    b->add_option("--B", bound.cfg.B, "loss bound");
    b->add_option("--delta-conf", bound.cfg.delta_conf, "confidence level");
    b->add_option("--epsilon", bound.cfg.lemma5_epsilon, "per-sample target at the smallest temperature");
    b->add_option("--checkpoint", bound.checkpoint, "take n, L, V and the gap from a trained run");

    RelevanceOptions rel;
    CLI::App* r = app.add_subcommand("relevance", "class-feature graph and semantic relevance");
    r->add_option("--out", rel.out, "output directory");
    r->add_option("--weights", rel.weights, "probe weight CSV")->required();
    r->add_option("--superclasses", rel.superclasses, "class_name,superclass_name file")->required();
    r->add_option("--K", rel.K, "top-K values (default 1..10)");
    r->add_flag("--abs-weights", rel.abs_weights, "rank by absolute weight");

    std::string config_path;
    for (CLI::App* sub : {t, p, s, e, b, r}) sub->add_option("--config", config_path, "key=value configuration file");

    std::vector<std::string> args;
    try {
        args = merge_config(std::vector<std::string>(argv + std::min(argc, 1), argv + argc));
    } catch (const Error& ex) {
        err << "sem: " << ex.what() << '\n';
        return 2;
    }
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& ex) {
        if (ex.get_exit_code() == 0) {
            app.exit(ex, out, err);
            return 0;
        }
        if (argc <= 1) {
            err << app.help();
        } else {
            app.exit(ex, out, err);
        }
        return 2;
    }

    try {
        if (t->parsed()) run_train(*t, train, out);
        if (p->parsed()) run_probe(*p, probe, out);
        if (s->parsed()) run_sweep(*s, sweep, out);
        if (e->parsed()) run_entropy(*e, entropy, out);
        if (b->parsed()) run_bound(*b, bound, out);
        if (r->parsed()) run_relevance(*r, rel, out);
    } catch (const std::exception& ex) {
        err << "sem: " << ex.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace sem
