#include "mozart/datapipe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "mozart/errors.hpp"
#include "mozart/rng.hpp"
#include "mozart/textio.hpp"

namespace mozart {

namespace {

using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

void check_unique_ids(const std::vector<SampleRecord>& records) {
    std::unordered_set<std::string> seen;
    for (const auto& r : records)
        if (!seen.insert(r.id).second)
            throw ValidationError("duplicate sample id '" + r.id + "'");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open file for writing: " + path);
    out << content;
}

}  // namespace

SplitAssignment stratified_split(const std::vector<SampleRecord>& records,
                                 std::array<double, 3> ratios, std::uint64_t seed) {
    double sum = ratios[0] + ratios[1] + ratios[2];
    if (ratios[0] <= 0.0 || ratios[1] <= 0.0 || ratios[2] <= 0.0 || std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("stratified_split: ratios must be positive and sum to 1");
    if (records.empty()) throw std::invalid_argument("stratified_split: empty registry");
    check_unique_ids(records);

    // std::map keeps classes in ascending label order, fixing the rng draw order.
    std::map<int, std::vector<std::string>> by_class;
    for (const auto& r : records) by_class[r.label].push_back(r.id);

    SplitAssignment out;
    out.seed = seed;
    out.ratios = ratios;
    Rng rng(seed);

    for (auto& [label, ids] : by_class) {
        if (ids.size() < 3)
            throw std::invalid_argument("stratified_split: class " + std::to_string(label) +
                                        " has fewer than 3 samples");
        rng.shuffle(ids);
        std::size_t n = ids.size();
        // Cumulative-floor boundaries keep every split within one sample of
        // its exact ratio; rounding slack lands in the test split.
        std::size_t n_train = static_cast<std::size_t>(std::floor(ratios[0] * n));
        std::size_t cut_val = static_cast<std::size_t>(std::floor((ratios[0] + ratios[1]) * n));
        out.train.insert(out.train.end(), ids.begin(), ids.begin() + n_train);
        out.validation.insert(out.validation.end(), ids.begin() + n_train, ids.begin() + cut_val);
        out.test.insert(out.test.end(), ids.begin() + cut_val, ids.end());
    }
    return out;
}

ValidationSubdivision subdivide_validation(const std::vector<SampleRecord>& val_records,
                                           std::uint64_t seed) {
    if (val_records.size() < 5)
        throw std::invalid_argument("subdivide_validation: need at least 5 samples");
    check_unique_ids(val_records);

    std::map<int, std::vector<std::string>> by_class;
    for (const auto& r : val_records) by_class[r.label].push_back(r.id);

    ValidationSubdivision out;
    Rng rng(seed);
    for (auto& [label, ids] : by_class) {
        rng.shuffle(ids);
        std::size_t n_train = static_cast<std::size_t>(std::floor(0.8 * ids.size()));
        out.meta_train.insert(out.meta_train.end(), ids.begin(), ids.begin() + n_train);
        out.meta_val.insert(out.meta_val.end(), ids.begin() + n_train, ids.end());
    }
    return out;
}

std::vector<SampleRecord> load_registry(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open registry: " + path);

    std::vector<SampleRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || (lineno == 1 && line.rfind("id,", 0) == 0)) continue;
        auto fields = split_csv_line(line);
        if (fields.size() < 2) throw ParseError("registry: expected `id,label[,path]`", lineno);
        SampleRecord r;
        r.id = fields[0];
        if (fields[1] != "0" && fields[1] != "1")
            throw ParseError("registry: label must be 0 or 1", lineno);
        r.label = fields[1][0] - '0';
        if (fields.size() > 2) r.source_path = fields[2];
        records.push_back(std::move(r));
    }
    if (records.empty()) throw ParseError("registry: no records", lineno ? lineno : 1);
    check_unique_ids(records);
    return records;
}

PredictionTable load_predictions(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open prediction file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw ParseError("prediction file: empty", 1);
    auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "id" || header[1] != "label")
        throw ParseError("prediction file: header must be `id,label,<model>...`", 1);

    PredictionTable t;
    t.model_names.assign(header.begin() + 2, header.end());
    std::size_t m = t.model_names.size();

    std::vector<double> probs;
    std::unordered_set<std::string> seen;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 2 + m)
            throw ParseError("prediction file: expected " + std::to_string(2 + m) + " fields",
                             lineno);
        if (!seen.insert(fields[0]).second)
            throw ValidationError("prediction file: duplicate id '" + fields[0] + "'");
        if (fields[1] != "0" && fields[1] != "1")
            throw ParseError("prediction file: label must be 0 or 1", lineno);
        t.ids.push_back(fields[0]);
        t.labels.push_back(fields[1][0] - '0');
        for (std::size_t j = 0; j < m; ++j) {
            std::size_t pos = 0;
            double p;
            try {
                p = std::stod(fields[2 + j], &pos);
            } catch (const std::exception&) {
                throw ParseError("prediction file: bad probability '" + fields[2 + j] + "'",
                                 lineno);
            }
            if (pos != fields[2 + j].size())
                throw ParseError("prediction file: bad probability '" + fields[2 + j] + "'",
                                 lineno);
            if (p < 0.0 || p > 1.0 || !std::isfinite(p))
                throw ValidationError("prediction file: probability out of [0,1] at row '" +
                                      fields[0] + "', column '" + t.model_names[j] + "'");
            probs.push_back(p);
        }
    }
    if (t.ids.empty()) throw ParseError("prediction file: no rows", lineno);

    t.probabilities = Matrix(t.ids.size(), m);
    t.probabilities.data = std::move(probs);
    return t;
}

std::string predictions_to_csv(const PredictionTable& table) {
    std::ostringstream out;
    out << "id,label";
    for (const auto& name : table.model_names) out << ',' << name;
    out << '\n';
    for (std::size_t i = 0; i < table.size(); ++i) {
        out << table.ids[i] << ',' << table.labels[i];
        for (std::size_t j = 0; j < table.model_names.size(); ++j)
            out << ',' << double_to_string(table.probabilities(i, j));
        out << '\n';
    }
    return out.str();
}

void save_predictions(const PredictionTable& table, const std::string& path) {
    write_file(path, predictions_to_csv(table));
}

void save_split_manifest(const SplitAssignment& split, const std::string& path) {
    json doc{{"seed", split.seed},
             {"ratios", split.ratios},
             {"train", split.train},
             {"validation", split.validation},
             {"test", split.test}};
    write_file(path, doc.dump(2) + "\n");
}

SplitAssignment load_split_manifest(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("split manifest: ") + e.what(), 1);
    }
    SplitAssignment s;
    try {
        s.seed = doc.at("seed").get<std::uint64_t>();
        auto r = doc.at("ratios").get<std::vector<double>>();
        if (r.size() != 3) throw ValidationError("split manifest: ratios must have 3 entries");
        std::copy(r.begin(), r.end(), s.ratios.begin());
        s.train = doc.at("train").get<std::vector<std::string>>();
        s.validation = doc.at("validation").get<std::vector<std::string>>();
        s.test = doc.at("test").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("split manifest: ") + e.what());
    }
    return s;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double probit(double p) {
    if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("probit: p must be in (0,1)");
    double lo = -10.0, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (normal_cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double noise_scale_for_accuracy(double accuracy) {
    if (accuracy <= 0.5 || accuracy >= 1.0)
        throw std::invalid_argument("noise_scale_for_accuracy: accuracy must be in (0.5, 1)");
    return 1.0 / probit(accuracy);
}

PredictionTable synth_base_learners(const SynthConfig& cfg) {
    if (cfg.n_samples == 0) throw std::invalid_argument("synth: n_samples must be >= 1");
    if (cfg.class_balance <= 0.0 || cfg.class_balance >= 1.0)
        throw std::invalid_argument("synth: class_balance must be in (0,1)");
    if (cfg.correlation < 0.0 || cfg.correlation > 1.0)
        throw std::invalid_argument("synth: correlation must be in [0,1]");
    if (cfg.noise_scales.empty() == cfg.target_accuracies.empty())
        throw std::invalid_argument(
            "synth: exactly one of noise_scales / target_accuracies must be set");

    std::vector<double> sigma = cfg.noise_scales;
    if (sigma.empty())
        for (double acc : cfg.target_accuracies) sigma.push_back(noise_scale_for_accuracy(acc));
    std::size_t m = sigma.size();

    PredictionTable t;
    t.model_names = cfg.model_names;
    if (t.model_names.empty())
        for (std::size_t j = 0; j < m; ++j) t.model_names.push_back("model" + std::to_string(j + 1));
    if (t.model_names.size() != m)
        throw std::invalid_argument("synth: model_names count != model count");

    t.probabilities = Matrix(cfg.n_samples, m);
    Rng rng(cfg.seed);
    double w_shared = std::sqrt(cfg.correlation);
    double w_private = std::sqrt(1.0 - cfg.correlation);

    char idbuf[24];
    for (std::size_t i = 0; i < cfg.n_samples; ++i) {
        std::snprintf(idbuf, sizeof(idbuf), "s%06zu", i);
        t.ids.emplace_back(idbuf);
        int label = rng.bernoulli(cfg.class_balance) ? 1 : 0;
        t.labels.push_back(label);
        double mu = label == 1 ? 1.0 : -1.0;
        double shared = rng.normal();
        for (std::size_t j = 0; j < m; ++j) {
            double x = mu + sigma[j] * (w_shared * shared + w_private * rng.normal());
            t.probabilities(i, j) = 1.0 / (1.0 + std::exp(-cfg.logistic_scale * x));
        }
    }
    return t;
}

}  // namespace mozart
