// amlb: desk-scale testbed for billing-preserving adversarial perturbation of
// smart-meter data with a proof-of-work setup ledger.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "amlb/attack.hpp"
#include "amlb/defense.hpp"
#include "amlb/ledger.hpp"
#include "amlb/neural.hpp"
#include "amlb/sim.hpp"
#include "amlb/timeseries.hpp"

namespace {

using namespace amlb;

enum class LogLevel { error = 0, info = 1, debug = 2 };

LogLevel log_level() {
    static LogLevel level = [] {
        const char* env = std::getenv("AMLB_LOG");
        if (!env) return LogLevel::info;
        std::string v(env);
        if (v == "error") return LogLevel::error;
        if (v == "debug") return LogLevel::debug;
        return LogLevel::info;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::info) std::cerr << "[amlb] " << msg << "\n";
}
void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::debug) std::cerr << "[amlb:debug] " << msg << "\n";
}

Bytes read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, std::span<const uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw std::runtime_error("write failure on " + path);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("write failure on " + path);
}

// ---- gen-data ---------------------------------------------------------------

struct GenDataArgs {
    int households = 1;
    double hours = 24.0;
    uint64_t seed = 0;
    std::string out;
    timeseries::GeneratorParams params;
};

int cmd_gen_data(const GenDataArgs& a) {
    timeseries::LoadProfile combined;
    combined.sampling_period_s = 1;
    const int64_t duration = int64_t(a.hours * 3600.0);
    for (int i = 0; i < a.households; ++i) {
        timeseries::GeneratorParams p = a.params;
        p.seed = sim::derive_seed(a.seed, "gen", uint32_t(i));
        auto profile = timeseries::generate_profile(p, duration);
        combined.readings.insert(combined.readings.end(), profile.readings.begin(), profile.readings.end());
        combined.occupancy.insert(combined.occupancy.end(), profile.occupancy.begin(),
                                  profile.occupancy.end());
    }
    timeseries::export_csv(combined, a.out);
    log_info("wrote " + std::to_string(combined.size()) + " rows to " + a.out);
    return 0;
}

// ---- train-attack -------------------------------------------------------------

attack::LabeledWindows windows_from_csvs(const std::vector<std::string>& paths, int window_len) {
    attack::LabeledWindows set;
    for (const auto& path : paths) {
        auto profile = timeseries::ingest_csv(path);
        auto wins = sim::collect_windows(profile.readings, profile.occupancy, 0, profile.size(), window_len);
        std::move(wins.windows.begin(), wins.windows.end(), std::back_inserter(set.windows));
        set.labels.insert(set.labels.end(), wins.labels.begin(), wins.labels.end());
    }
    return set;
}

int cmd_train_attack(const std::vector<std::string>& data, int window, double threshold,
                     const neural::TrainConfig& cfg, const std::string& out) {
    auto set = windows_from_csvs(data, window);
    log_info("training attacker on " + std::to_string(set.windows.size()) + " windows");
    auto model = attack::train_attacker(set, cfg, threshold);
    auto metrics = attack::evaluate(model, set);
    write_file(out, attack::save_attack_model(model));
    std::printf("attacker trained: windows=%zu training-accuracy=%.4f f1=%.4f -> %s\n", set.windows.size(),
                metrics.accuracy, metrics.f1, out.c_str());
    return 0;
}

// ---- train-surrogate ----------------------------------------------------------

int cmd_train_surrogate(const std::string& data, int context, const neural::TrainConfig& cfg,
                        const std::string& warm_start, int max_windows, const std::string& out) {
    auto profile = timeseries::ingest_csv(data);
    defense::SurrogateModel model;
    if (!warm_start.empty()) {
        auto population = neural::load_sequence_classifier(read_file(warm_start));
        model = defense::train_surrogate(profile, context, cfg, &population, max_windows);
    } else {
        model = defense::train_surrogate(profile, context, cfg, nullptr, max_windows);
    }
    write_file(out, neural::save_weights(model.classifier));
    std::printf("surrogate trained on %s (context %d) -> %s\n", data.c_str(), context, out.c_str());
    return 0;
}

// ---- defend -------------------------------------------------------------------

int cmd_defend(const std::string& data, const std::string& surrogate_path, const std::string& level_name,
               int window, int context, double tariff_rate, int tariff_resolution, const std::string& out) {
    auto profile = timeseries::ingest_csv(data);
    defense::SurrogateModel surrogate;
    surrogate.classifier = neural::load_sequence_classifier(read_file(surrogate_path));
    surrogate.context_len = context;
    surrogate.trained = true;

    const auto level = defense::PrivacyLevel::parse(level_name);
    auto perturbed = defense::perturb(surrogate, profile.readings, profile.occupancy, level, window);

    timeseries::LoadProfile out_profile = profile;
    out_profile.readings = perturbed.readings;
    timeseries::export_csv(out_profile, out);

    timeseries::Tariff tariff(tariff_resolution, {tariff_rate}, window);
    auto check = defense::verify_billing(profile, perturbed, tariff);
    std::printf("perturbed %zu samples at level %s -> %s\n", profile.size(), level.name(), out.c_str());
    std::printf("bill before %.6f after %.6f (rel delta %.3e), max window delta %.3e\n", check.bill_before,
                check.bill_after, check.bill_rel_delta, check.max_window_delta);
    return 0;
}

// ---- chain-build / chain-verify -------------------------------------------------

int cmd_chain_build(const std::vector<std::string>& data, uint32_t difficulty, int epochs, int window,
                    uint64_t seed, const std::string& publish_model, const std::string& out) {
    std::vector<timeseries::LoadProfile> profiles;
    for (const auto& path : data) profiles.push_back(timeseries::ingest_csv(path));

    auto chain = ledger::make_chain(difficulty, 1700000000);
    const size_t w = size_t(window);
    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::vector<ledger::MeterTransaction> txs;
        for (size_t i = 0; i < profiles.size(); ++i) {
            const auto& p = profiles[i];
            size_t usable = p.size() - p.size() % w;
            size_t seg = usable / size_t(epochs);
            seg -= seg % w;
            if (seg == 0) throw std::runtime_error("profile too short for requested epochs");
            std::vector<double> energies;
            for (size_t start = size_t(epoch) * seg; start + w <= size_t(epoch) * seg + seg; start += w)
                energies.push_back(timeseries::window_energy_wh(std::span(p.readings).subspan(start, w),
                                                                p.sampling_period_s));
            auto key = ledger::keygen(sim::derive_seed(seed, "key:" + std::to_string(epoch), uint32_t(i)));
            txs.push_back(
                ledger::make_transaction(key, ledger::encode_meter_payload(uint32_t(epoch), energies)));
        }
        ledger::append_block(chain, std::move(txs), 1700000000 + uint64_t(epoch + 1) * 3600);
    }
    if (!publish_model.empty()) {
        auto key = ledger::keygen(sim::derive_seed(seed, "uckey", 0));
        ledger::append_block(chain, {ledger::make_transaction(key, read_file(publish_model))},
                             1700000000 + uint64_t(epochs + 1) * 3600);
    }
    write_file(out, ledger::serialize_chain(chain));
    std::printf("chain with %zu blocks (%llu total mining attempts) -> %s\n", chain.blocks.size(),
                static_cast<unsigned long long>(chain.total_attempts), out.c_str());
    return 0;
}

int cmd_chain_verify(const std::string& path) {
    ledger::Chain chain;
    try {
        chain = ledger::deserialize_chain(read_file(path));
    } catch (const CodecError& e) {
        std::cerr << "chain file corrupt: " << e.what() << "\n";
        return 1;
    }
    const auto result = ledger::validate_chain(chain);
    if (!result.ok) {
        std::cerr << "chain INVALID at block " << result.block_index << ": " << result.reason << "\n";
        return 1;
    }
    size_t txs = 0;
    for (const auto& b : chain.blocks) txs += b.transactions.size();
    std::printf("chain OK: %zu blocks, %zu transactions, difficulty %u\n", chain.blocks.size(), txs,
                chain.difficulty);
    return 0;
}

// ---- run-experiment -------------------------------------------------------------

void apply_config_file(sim::SimConfig& cfg, const std::string& path) {
    nlohmann::json j = nlohmann::json::parse(read_file(path));
    if (j.contains("households")) cfg.households = j["households"].get<int>();
    if (j.contains("duration_s")) cfg.duration_s = j["duration_s"].get<int64_t>();
    if (j.contains("hours")) cfg.duration_s = int64_t(j["hours"].get<double>() * 3600.0);
    if (j.contains("billing_window")) cfg.billing_window = j["billing_window"].get<int>();
    if (j.contains("attack_window")) cfg.attack_window = j["attack_window"].get<int>();
    if (j.contains("surrogate_context")) cfg.surrogate_context = j["surrogate_context"].get<int>();
    if (j.contains("level")) cfg.level = defense::PrivacyLevel::parse(j["level"].get<std::string>()).level;
    if (j.contains("chain_difficulty")) cfg.chain_difficulty = j["chain_difficulty"].get<uint32_t>();
    if (j.contains("reporting_epochs")) cfg.reporting_epochs = j["reporting_epochs"].get<int>();
    if (j.contains("train_fraction")) cfg.train_fraction = j["train_fraction"].get<double>();
    if (j.contains("tariff")) {
        auto& t = j["tariff"];
        cfg.tariff = timeseries::Tariff(t.value("resolution_samples", cfg.tariff.resolution_samples),
                                        t.value("rates", cfg.tariff.rates), cfg.billing_window);
    }
    if (j.contains("generator")) {
        auto& g = j["generator"];
        cfg.generator.base_load_w = g.value("base_load_w", cfg.generator.base_load_w);
        cfg.generator.occupied_event_rate = g.value("occupied_event_rate", cfg.generator.occupied_event_rate);
        cfg.generator.unoccupied_event_rate =
            g.value("unoccupied_event_rate", cfg.generator.unoccupied_event_rate);
        cfg.generator.occupancy_segment_mean_s =
            g.value("occupancy_segment_mean_s", cfg.generator.occupancy_segment_mean_s);
        cfg.generator.noise_std_w = g.value("noise_std_w", cfg.generator.noise_std_w);
        if (g.contains("appliance_pool")) {
            cfg.generator.appliance_pool.clear();
            for (auto& a : g["appliance_pool"])
                cfg.generator.appliance_pool.push_back(
                    {a["power_w"].get<double>(), a["mean_duration_s"].get<double>()});
        }
    }
    auto train_cfg = [&](const char* key, neural::TrainConfig& t) {
        if (!j.contains(key)) return;
        auto& c = j[key];
        t.learning_rate = c.value("learning_rate", t.learning_rate);
        t.epochs = c.value("epochs", t.epochs);
        t.batch_size = c.value("batch_size", t.batch_size);
        if (c.contains("optimizer"))
            t.optimizer = c["optimizer"].get<std::string>() == "sgd" ? neural::TrainConfig::Optimizer::sgd
                                                                     : neural::TrainConfig::Optimizer::adam;
    };
    train_cfg("attacker", cfg.attacker_cfg);
    train_cfg("surrogate", cfg.surrogate_cfg);
    train_cfg("population", cfg.population_cfg);
    if (j.contains("surrogate_warm_epochs")) cfg.surrogate_warm_epochs = j["surrogate_warm_epochs"].get<int>();
    if (j.contains("surrogate_max_windows")) cfg.surrogate_max_windows = j["surrogate_max_windows"].get<int>();
    if (j.contains("population_max_windows"))
        cfg.population_max_windows = j["population_max_windows"].get<int>();
}

// ---- report -----------------------------------------------------------------

int cmd_report(const std::string& in) {
    nlohmann::json j = nlohmann::json::parse(read_file(in));
    std::printf("AMLODA-B experiment report (seed %llu, version %s)\n",
                static_cast<unsigned long long>(j["seed"].get<uint64_t>()),
                j["version"].get<std::string>().c_str());
    std::printf("setup: %llu blocks, %.1f mean mining attempts\n",
                static_cast<unsigned long long>(j["setup"]["chain_blocks"].get<uint64_t>()),
                j["setup"]["mean_mining_attempts"].get<double>());
    auto row = [](const std::string& name, const nlohmann::json& m) {
        std::printf("  %-8s %9.4f %10.4f %8.4f %8.4f\n", name.c_str(), m["accuracy"].get<double>(),
                    m["precision"].get<double>(), m["recall"].get<double>(), m["f1"].get<double>());
    };
    std::printf("attack:\n  %-8s %9s %10s %8s %8s\n", "level", "accuracy", "precision", "recall", "f1");
    row("pre", j["attack"]["pre"]);
    for (auto& [name, metrics] : j["attack"]["post_by_level"].items()) row(name, metrics);
    std::printf("billing: max window delta %.3e, max bill rel delta %.3e\n",
                j["billing"]["max_window_delta"].get<double>(),
                j["billing"]["max_bill_rel_delta"].get<double>());
    if (j.contains("error")) std::printf("ERROR: %s\n", j["error"].get<std::string>().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AMLODA-B testbed: occupancy-detection attack, billing-preserving defense, PoW setup ledger"};
    app.require_subcommand(1);

    // gen-data
    GenDataArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "Generate synthetic household consumption CSV");
    gen_cmd->add_option("--households", gen.households, "Number of households (concatenated in time)");
    gen_cmd->add_option("--hours", gen.hours, "Duration per household in hours");
    gen_cmd->add_option("--seed", gen.seed, "Master seed")->required();
    gen_cmd->add_option("--out", gen.out, "Output CSV path")->required();
    gen_cmd->add_option("--base-load", gen.params.base_load_w, "Base load in watts");
    gen_cmd->add_option("--noise-std", gen.params.noise_std_w, "Sensor noise std in watts");
    gen_cmd->add_option("--occupied-rate", gen.params.occupied_event_rate, "Appliance events/h occupied");
    gen_cmd->add_option("--unoccupied-rate", gen.params.unoccupied_event_rate, "Appliance events/h away");
    gen_cmd->add_option("--dwell-mean", gen.params.occupancy_segment_mean_s, "Mean occupancy dwell (s)");

    // train-attack
    std::vector<std::string> atk_data;
    int atk_window = 60;
    double atk_threshold = 150.0;
    neural::TrainConfig atk_cfg;
    std::string atk_out;
    auto* atk_cmd = app.add_subcommand("train-attack", "Train the occupancy-detection attacker");
    atk_cmd->add_option("--data", atk_data, "Labeled CSV file(s)")->required();
    atk_cmd->add_option("--window", atk_window, "Analysis window length in samples");
    atk_cmd->add_option("--threshold", atk_threshold, "On/off threshold in watts");
    atk_cmd->add_option("--epochs", atk_cfg.epochs, "Training epochs");
    atk_cmd->add_option("--lr", atk_cfg.learning_rate, "Learning rate");
    atk_cmd->add_option("--batch", atk_cfg.batch_size, "Batch size");
    atk_cmd->add_option("--seed", atk_cfg.seed, "Training seed")->required();
    atk_cmd->add_option("--out", atk_out, "Output model path")->required();

    // train-surrogate
    std::string sur_data, sur_warm, sur_out;
    int sur_context = 60, sur_max_windows = 0;
    neural::TrainConfig sur_cfg;
    auto* sur_cmd = app.add_subcommand("train-surrogate", "Train the defender's LSTM surrogate");
    sur_cmd->add_option("--data", sur_data, "Local history CSV")->required();
    sur_cmd->add_option("--context", sur_context, "Context window length in samples");
    sur_cmd->add_option("--epochs", sur_cfg.epochs, "Training epochs");
    sur_cmd->add_option("--lr", sur_cfg.learning_rate, "Learning rate");
    sur_cmd->add_option("--batch", sur_cfg.batch_size, "Batch size");
    sur_cmd->add_option("--seed", sur_cfg.seed, "Training seed")->required();
    sur_cmd->add_option("--warm-start", sur_warm, "Population weight file to fine-tune from");
    sur_cmd->add_option("--max-windows", sur_max_windows, "Cap on training windows (0 = all)");
    sur_cmd->add_option("--out", sur_out, "Output weight path")->required();

    // defend
    std::string def_data, def_surrogate, def_level = "high", def_out;
    int def_window = 2, def_context = 60, def_tariff_res = 1800;
    double def_tariff_rate = 0.12;
    auto* def_cmd = app.add_subcommand("defend", "Perturb a consumption CSV at a privacy level");
    def_cmd->add_option("--data", def_data, "Input CSV")->required();
    def_cmd->add_option("--surrogate", def_surrogate, "Trained surrogate weight file")->required();
    def_cmd->add_option("--level", def_level, "off | low | medium | high");
    def_cmd->add_option("--window", def_window, "Billing window in samples");
    def_cmd->add_option("--context", def_context, "Surrogate context length");
    def_cmd->add_option("--tariff-rate", def_tariff_rate, "Flat tariff rate per kWh");
    def_cmd->add_option("--tariff-resolution", def_tariff_res, "Tariff resolution in samples");
    def_cmd->add_option("--out", def_out, "Output CSV path")->required();

    // chain-build
    std::vector<std::string> cb_data;
    uint32_t cb_difficulty = 12;
    int cb_epochs = 2, cb_window = 2;
    uint64_t cb_seed = 0;
    std::string cb_model, cb_out;
    auto* cb_cmd = app.add_subcommand("chain-build", "Build a PoW chain of pseudonymous meter reports");
    cb_cmd->add_option("--data", cb_data, "Household CSV file(s)")->required();
    cb_cmd->add_option("--difficulty", cb_difficulty, "Leading-zero-bit difficulty [0,32]");
    cb_cmd->add_option("--epochs", cb_epochs, "Reporting epochs");
    cb_cmd->add_option("--window", cb_window, "Billing window in samples");
    cb_cmd->add_option("--seed", cb_seed, "Key derivation seed")->required();
    cb_cmd->add_option("--publish-model", cb_model, "Weight file to publish as a UC transaction");
    cb_cmd->add_option("--out", cb_out, "Output chain path")->required();

    // chain-verify
    std::string cv_chain;
    auto* cv_cmd = app.add_subcommand("chain-verify", "Re-validate a chain file end to end");
    cv_cmd->add_option("--chain", cv_chain, "Chain file")->required();

    // run-experiment
    sim::SimConfig exp_cfg;
    std::string exp_config_file, exp_level, exp_out;
    double exp_hours = 0;
    int exp_households = 0;
    uint32_t exp_difficulty = 0;
    auto* exp_cmd = app.add_subcommand("run-experiment", "Run the full seeded attack/defense experiment");
    exp_cmd->add_option("--seed", exp_cfg.master_seed, "Master seed")->required();
    exp_cmd->add_option("--config", exp_config_file, "JSON config file (flags override it)");
    exp_cmd->add_option("--level", exp_level, "off | low | medium | high");
    exp_cmd->add_option("--households", exp_households, "Household count");
    exp_cmd->add_option("--hours", exp_hours, "Duration per household in hours");
    exp_cmd->add_option("--difficulty", exp_difficulty, "Chain difficulty");
    exp_cmd->add_option("--out", exp_out, "Report JSON path")->required();

    // report
    std::string rep_in;
    auto* rep_cmd = app.add_subcommand("report", "Render a report JSON as a text summary");
    rep_cmd->add_option("--in", rep_in, "Report JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);    // exit 0
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        std::cerr << "run with --help for usage\n";
        return 2;
    }

    try {
        if (gen_cmd->parsed()) return cmd_gen_data(gen);
        if (atk_cmd->parsed()) return cmd_train_attack(atk_data, atk_window, atk_threshold, atk_cfg, atk_out);
        if (sur_cmd->parsed())
            return cmd_train_surrogate(sur_data, sur_context, sur_cfg, sur_warm, sur_max_windows, sur_out);
        if (def_cmd->parsed())
            return cmd_defend(def_data, def_surrogate, def_level, def_window, def_context, def_tariff_rate,
                              def_tariff_res, def_out);
        if (cb_cmd->parsed())
            return cmd_chain_build(cb_data, cb_difficulty, cb_epochs, cb_window, cb_seed, cb_model, cb_out);
        if (cv_cmd->parsed()) return cmd_chain_verify(cv_chain);
        if (exp_cmd->parsed()) {
            if (!exp_config_file.empty()) apply_config_file(exp_cfg, exp_config_file);
            // flags take precedence over the config file
            if (exp_cmd->count("--households")) exp_cfg.households = exp_households;
            if (exp_cmd->count("--hours")) exp_cfg.duration_s = int64_t(exp_hours * 3600.0);
            if (exp_cmd->count("--difficulty")) exp_cfg.chain_difficulty = exp_difficulty;
            if (exp_cmd->count("--level")) exp_cfg.level = defense::PrivacyLevel::parse(exp_level).level;
            auto report = sim::run_experiment(exp_cfg, [](const std::string& msg) { log_info(msg); });
            write_text(exp_out, report.to_json());
            log_debug("report written to " + exp_out);
            if (report.error) {
                std::cerr << "experiment failed: " << *report.error << "\n";
                return 1;
            }
            std::printf("report -> %s\n", exp_out.c_str());
            return 0;
        }
        if (rep_cmd->parsed()) return cmd_report(rep_in);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
