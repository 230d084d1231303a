#include "amlb/sim.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace amlb::sim {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr uint64_t kGenesisTimestamp = 1700000000;
constexpr size_t kHiddenSize = 8;

std::string household_id(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "gu-%03d", index);
    return buf;
}

void note(const ProgressFn& progress, const std::string& msg) {
    if (progress) progress(msg);
}

}  // namespace

uint64_t derive_seed(uint64_t master, const std::string& role, uint32_t index) {
    ByteWriter w;
    w.u64(master);
    w.raw(std::span(reinterpret_cast<const uint8_t*>(role.data()), role.size()));
    w.u32(index);
    const Digest d = sha256(w.bytes());
    uint64_t seed = 0;
    for (int i = 0; i < 8; ++i) seed = seed << 8 | d[i];
    return seed;
}

void SimConfig::validate() const {
    if (households < 1) throw std::invalid_argument("need at least one household");
    if (billing_window < 2) throw std::invalid_argument("billing window must span at least 2 samples");
    if (attack_window < 1) throw std::invalid_argument("attack window must be positive");
    if (surrogate_context < billing_window || surrogate_context % billing_window != 0)
        throw std::invalid_argument("surrogate context must be a positive multiple of the billing window");
    if (tariff.window_len_samples != billing_window)
        throw std::invalid_argument("tariff billing window differs from configured billing window");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("train fraction must be in (0, 1)");
    if (reporting_epochs < 1) throw std::invalid_argument("need at least one reporting epoch");
    if (duration_s < 2 * surrogate_context)
        throw std::invalid_argument("duration too short for the configured windows");
    generator.validate();
    attacker_cfg.validate();
    surrogate_cfg.validate();
    population_cfg.validate();
    if (surrogate_warm_epochs < 0) throw std::invalid_argument("warm epochs must be >= 0");
}

size_t SimConfig::train_len(size_t profile_len) const {
    size_t len = size_t(double(profile_len) * train_fraction);
    return len - len % size_t(surrogate_context);
}

namespace {

std::vector<timeseries::LoadProfile> generate_households(const SimConfig& cfg) {
    std::vector<timeseries::LoadProfile> profiles;
    profiles.reserve(size_t(cfg.households));
    for (int i = 0; i < cfg.households; ++i) {
        timeseries::GeneratorParams params = cfg.generator;
        params.seed = derive_seed(cfg.master_seed, "gen", uint32_t(i));
        auto profile = timeseries::generate_profile(params, cfg.duration_s);
        profile.household_id = household_id(i);
        profiles.push_back(std::move(profile));
    }
    return profiles;
}

}  // namespace

attack::LabeledWindows collect_windows(std::span<const double> readings,
                                       std::span<const uint8_t> occupancy, size_t begin, size_t end,
                                       int window_len) {
    attack::LabeledWindows out;
    const size_t wl = size_t(window_len);
    for (size_t start = begin; start + wl <= end; start += wl) {
        out.windows.emplace_back(readings.begin() + start, readings.begin() + start + wl);
        size_t ones = 0;
        for (size_t k = start; k < start + wl; ++k) ones += occupancy[k];
        out.labels.push_back(2 * ones >= wl ? 1 : 0);
    }
    return out;
}

SetupResult run_setup_phase(const SimConfig& cfg, const ProgressFn& progress) {
    cfg.validate();
    const auto profiles = generate_households(cfg);
    note(progress, "setup: generated " + std::to_string(profiles.size()) + " household profiles");

    SetupResult result;
    result.chain = ledger::make_chain(cfg.chain_difficulty, kGenesisTimestamp);

    const size_t w = size_t(cfg.billing_window);
    const size_t train_len = cfg.train_len(profiles[0].size());
    size_t segment = train_len / size_t(cfg.reporting_epochs);
    segment -= segment % w;
    if (segment == 0) throw std::invalid_argument("reporting epochs leave no complete billing window");

    // Each GU submits its per-window energies for each reporting epoch under a
    // fresh one-time pseudonym; one block per epoch.
    for (int epoch = 0; epoch < cfg.reporting_epochs; ++epoch) {
        std::vector<ledger::MeterTransaction> txs;
        txs.reserve(profiles.size());
        const size_t seg_begin = size_t(epoch) * segment;
        for (int i = 0; i < cfg.households; ++i) {
            const auto& profile = profiles[size_t(i)];
            std::vector<double> energies;
            energies.reserve(segment / w);
            for (size_t start = seg_begin; start + w <= seg_begin + segment; start += w) {
                energies.push_back(timeseries::window_energy_wh(
                    std::span(profile.readings).subspan(start, w), profile.sampling_period_s));
            }
            auto key = ledger::keygen(
                derive_seed(cfg.master_seed, "key:" + std::to_string(epoch), uint32_t(i)));
            txs.push_back(ledger::make_transaction(key, ledger::encode_meter_payload(uint32_t(epoch), energies)));
            ++result.meter_transactions;
        }
        ledger::append_block(result.chain, std::move(txs), kGenesisTimestamp + uint64_t(epoch + 1) * 3600);
    }
    note(progress, "setup: mined " + std::to_string(result.chain.blocks.size()) + " blocks");

    // The UC sees pseudonymous payloads only. It rebuilds approximate power
    // traces from the window energies, labels context windows by a pooled
    // median-energy split and trains the population model on that.
    std::vector<neural::Sample> pool;
    double max_power = 0;
    const size_t ctx = size_t(cfg.surrogate_context);
    for (const auto& block : result.chain.blocks) {
        for (const auto& tx : block.transactions) {
            const auto payload = ledger::decode_meter_payload(tx.payload);
            std::vector<double> power;
            power.reserve(payload.energies_wh.size() * w);
            for (double e : payload.energies_wh) {
                const double avg_w = e * 3600.0 / double(w);
                for (size_t k = 0; k < w; ++k) power.push_back(avg_w);
            }
            for (double p : power) max_power = std::max(max_power, p);
            for (size_t start = 0; start + ctx <= power.size(); start += ctx) {
                neural::Sample s;
                s.input.assign(power.begin() + start, power.begin() + start + ctx);
                s.label = 0;    // assigned after the pooled median is known
                pool.push_back(std::move(s));
            }
        }
    }
    std::vector<double> means(pool.size());
    for (size_t i = 0; i < pool.size(); ++i) {
        double sum = 0;
        for (double v : pool[i].input) sum += v;
        means[i] = sum / double(pool[i].input.size());
    }
    std::vector<double> sorted = means;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted.empty() ? 0.0 : sorted[sorted.size() / 2];
    bool has0 = false, has1 = false;
    for (size_t i = 0; i < pool.size(); ++i) {
        pool[i].label = means[i] > median ? 1 : 0;
        (pool[i].label ? has1 : has0) = true;
    }
    if (cfg.population_max_windows > 0 && pool.size() > size_t(cfg.population_max_windows)) {
        const size_t stride = (pool.size() + size_t(cfg.population_max_windows) - 1) /
                              size_t(cfg.population_max_windows);
        std::vector<neural::Sample> sub;
        for (size_t i = 0; i < pool.size(); i += stride) sub.push_back(std::move(pool[i]));
        pool = std::move(sub);
    }

    const double scale = max_power > 0 ? 1.0 / max_power : 1.0;
    result.population_model =
        neural::make_sequence_classifier(kHiddenSize, derive_seed(cfg.master_seed, "population", 0), scale);
    if (has0 && has1) {
        neural::TrainConfig pop_cfg = cfg.population_cfg;
        pop_cfg.seed = derive_seed(cfg.master_seed, "population-train", 0);
        neural::train(result.population_model, pool, pop_cfg);
    }
    note(progress, "setup: population model trained on " + std::to_string(pool.size()) + " pooled windows");

    // Publication: the weight bytes ride the chain as one UC-signed transaction.
    auto uc_key = ledger::keygen(derive_seed(cfg.master_seed, "uckey", 0));
    ledger::append_block(result.chain,
                         {ledger::make_transaction(uc_key, neural::save_weights(result.population_model))},
                         kGenesisTimestamp + uint64_t(cfg.reporting_epochs + 1) * 3600);

    const auto validation = ledger::validate_chain(result.chain);
    if (!validation.ok)
        throw StateError("setup chain failed validation at block " + std::to_string(validation.block_index) +
                         ": " + validation.reason);

    result.mean_mining_attempts = double(result.chain.total_attempts) / double(result.chain.blocks.size());
    return result;
}

namespace {

struct OnlineContext {
    std::vector<timeseries::LoadProfile> profiles;
    std::vector<defense::SurrogateModel> surrogates;
    size_t train_len = 0;
};

OnlineContext prepare_online(const SimConfig& cfg, const neural::SequenceClassifier& population_model,
                             const ProgressFn& progress) {
    cfg.validate();
    OnlineContext ctx;
    ctx.profiles = generate_households(cfg);
    ctx.train_len = cfg.train_len(ctx.profiles[0].size());
    ctx.surrogates.reserve(ctx.profiles.size());
    for (int i = 0; i < cfg.households; ++i) {
        const auto& profile = ctx.profiles[size_t(i)];
        timeseries::LoadProfile history;
        history.household_id = profile.household_id;
        history.sampling_period_s = profile.sampling_period_s;
        history.readings.assign(profile.readings.begin(), profile.readings.begin() + ctx.train_len);
        history.occupancy.assign(profile.occupancy.begin(), profile.occupancy.begin() + ctx.train_len);

        neural::TrainConfig cfg_i = cfg.surrogate_cfg;
        cfg_i.seed = derive_seed(cfg.master_seed, "surrogate", uint32_t(i));
        cfg_i.epochs = cfg.surrogate_warm_epochs;
        ctx.surrogates.push_back(defense::train_surrogate(history, cfg.surrogate_context, cfg_i,
                                                          &population_model, cfg.surrogate_max_windows));
        note(progress, "online: surrogate ready for " + profile.household_id);
    }
    return ctx;
}

std::vector<HouseholdStream> perturb_all(const SimConfig& cfg, const OnlineContext& ctx,
                                         defense::Level level) {
    const auto privacy = defense::PrivacyLevel::from(level);
    std::vector<HouseholdStream> streams;
    streams.reserve(ctx.profiles.size());
    for (size_t i = 0; i < ctx.profiles.size(); ++i) {
        const auto& profile = ctx.profiles[i];
        HouseholdStream hs;
        hs.household_id = profile.household_id;
        hs.test_profile.household_id = profile.household_id;
        hs.test_profile.sampling_period_s = profile.sampling_period_s;
        hs.test_profile.readings.assign(profile.readings.begin() + ctx.train_len, profile.readings.end());
        hs.test_profile.occupancy.assign(profile.occupancy.begin() + ctx.train_len, profile.occupancy.end());
        hs.perturbed = defense::perturb(ctx.surrogates[i], hs.test_profile.readings,
                                        hs.test_profile.occupancy, privacy, cfg.billing_window);
        streams.push_back(std::move(hs));
    }
    return streams;
}

}  // namespace

std::vector<HouseholdStream> run_online_phase(const SimConfig& cfg,
                                              const neural::SequenceClassifier& population_model,
                                              const ProgressFn& progress) {
    const OnlineContext ctx = prepare_online(cfg, population_model, progress);
    return perturb_all(cfg, ctx, cfg.level);
}

ExperimentReport run_experiment(const SimConfig& cfg, const ProgressFn& progress) {
    cfg.validate();
    ExperimentReport report;
    report.config = cfg;
    report.seed = cfg.master_seed;

    try {
        auto setup = run_setup_phase(cfg, progress);
        report.chain_blocks = setup.chain.blocks.size();
        report.mean_mining_attempts = setup.mean_mining_attempts;

        // The attacker trains on clean data; it never sees the surrogates.
        const auto profiles = generate_households(cfg);
        const size_t train_len = cfg.train_len(profiles[0].size());
        const double threshold = cfg.generator.base_load_w + 3.0 * cfg.generator.noise_std_w;

        attack::LabeledWindows train_set, test_set;
        for (const auto& p : profiles) {
            auto tr = collect_windows(p.readings, p.occupancy, 0, train_len, cfg.attack_window);
            auto te = collect_windows(p.readings, p.occupancy, train_len, p.size(), cfg.attack_window);
            std::move(tr.windows.begin(), tr.windows.end(), std::back_inserter(train_set.windows));
            train_set.labels.insert(train_set.labels.end(), tr.labels.begin(), tr.labels.end());
            std::move(te.windows.begin(), te.windows.end(), std::back_inserter(test_set.windows));
            test_set.labels.insert(test_set.labels.end(), te.labels.begin(), te.labels.end());
        }
        neural::TrainConfig atk_cfg = cfg.attacker_cfg;
        atk_cfg.seed = derive_seed(cfg.master_seed, "attacker", 0);
        const auto attacker = attack::train_attacker(train_set, atk_cfg, threshold);
        report.pre = attack::evaluate(attacker, test_set);
        note(progress, "attack: pre-defense accuracy " + std::to_string(report.pre.accuracy));

        const OnlineContext ctx = prepare_online(cfg, setup.population_model, progress);
        for (defense::Level level :
             {defense::Level::off, defense::Level::low, defense::Level::medium, defense::Level::high}) {
            const auto streams = perturb_all(cfg, ctx, level);
            LevelResult lr;
            lr.level = defense::PrivacyLevel::from(level);

            attack::LabeledWindows perturbed_set;
            for (const auto& hs : streams) {
                auto wins = collect_windows(hs.perturbed.readings, hs.test_profile.occupancy, 0,
                                            hs.perturbed.readings.size(), cfg.attack_window);
                std::move(wins.windows.begin(), wins.windows.end(),
                          std::back_inserter(perturbed_set.windows));
                perturbed_set.labels.insert(perturbed_set.labels.end(), wins.labels.begin(),
                                            wins.labels.end());
                lr.billing.push_back(defense::verify_billing(hs.test_profile, hs.perturbed, cfg.tariff));
                report.max_window_delta = std::max(report.max_window_delta, lr.billing.back().max_window_delta);
                report.max_bill_rel_delta =
                    std::max(report.max_bill_rel_delta, lr.billing.back().bill_rel_delta);
            }
            lr.metrics = attack::evaluate(attacker, perturbed_set);
            note(progress, std::string("defense: level ") + lr.level.name() + " accuracy " +
                               std::to_string(lr.metrics.accuracy));
            report.post_by_level.push_back(std::move(lr));
        }
    } catch (const std::exception& e) {
        report.error = e.what();
    }
    return report;
}

namespace {

ordered_json metrics_json(const attack::Metrics& m) {
    return ordered_json{{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

ordered_json config_json(const SimConfig& cfg) {
    ordered_json generator{
        {"base_load_w", cfg.generator.base_load_w},
        {"occupied_event_rate", cfg.generator.occupied_event_rate},
        {"unoccupied_event_rate", cfg.generator.unoccupied_event_rate},
        {"occupancy_segment_mean_s", cfg.generator.occupancy_segment_mean_s},
        {"noise_std_w", cfg.generator.noise_std_w},
    };
    ordered_json pool = ordered_json::array();
    for (const auto& a : cfg.generator.appliance_pool)
        pool.push_back(ordered_json{{"power_w", a.power_w}, {"mean_duration_s", a.mean_duration_s}});
    generator["appliance_pool"] = std::move(pool);

    auto train_json = [](const neural::TrainConfig& t) {
        return ordered_json{
            {"learning_rate", t.learning_rate},
            {"epochs", t.epochs},
            {"batch_size", t.batch_size},
            {"optimizer", t.optimizer == neural::TrainConfig::Optimizer::adam ? "adam" : "sgd"},
        };
    };

    return ordered_json{
        {"households", cfg.households},
        {"duration_s", cfg.duration_s},
        {"billing_window", cfg.billing_window},
        {"attack_window", cfg.attack_window},
        {"surrogate_context", cfg.surrogate_context},
        {"level", defense::PrivacyLevel::from(cfg.level).name()},
        {"chain_difficulty", cfg.chain_difficulty},
        {"reporting_epochs", cfg.reporting_epochs},
        {"train_fraction", cfg.train_fraction},
        {"tariff",
         ordered_json{{"resolution_samples", cfg.tariff.resolution_samples}, {"rates", cfg.tariff.rates}}},
        {"generator", std::move(generator)},
        {"attacker", train_json(cfg.attacker_cfg)},
        {"surrogate", train_json(cfg.surrogate_cfg)},
        {"population", train_json(cfg.population_cfg)},
        {"surrogate_warm_epochs", cfg.surrogate_warm_epochs},
        {"surrogate_max_windows", cfg.surrogate_max_windows},
        {"population_max_windows", cfg.population_max_windows},
    };
}

}  // namespace

std::string ExperimentReport::to_json() const {
    ordered_json j;
    j["config"] = config_json(config);
    j["setup"] = ordered_json{{"chain_blocks", chain_blocks}, {"mean_mining_attempts", mean_mining_attempts}};
    ordered_json post;
    for (const auto& lr : post_by_level) post[lr.level.name()] = metrics_json(lr.metrics);
    j["attack"] = ordered_json{{"pre", metrics_json(pre)}, {"post_by_level", std::move(post)}};
    j["billing"] =
        ordered_json{{"max_window_delta", max_window_delta}, {"max_bill_rel_delta", max_bill_rel_delta}};
    j["seed"] = seed;
    j["version"] = version;
    if (error) j["error"] = *error;
    return j.dump(2) + "\n";
}

}  // namespace amlb::sim
