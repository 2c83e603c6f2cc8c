#include "ndram/data/context.hpp"

#include <cmath>
#include <stdexcept>

namespace ndram::data {

const std::array<FieldSpec, kNumContextFields>& context_schema() {
    static const std::array<FieldSpec, kNumContextFields> schema = {{
        {"age", FieldKind::Numeric, 0},
        {"gender", FieldKind::Categorical, 2},
        {"education", FieldKind::Numeric, 0},
        {"cdrsb", FieldKind::Numeric, 0},
        {"adas11", FieldKind::Numeric, 0},
        {"adas13", FieldKind::Numeric, 0},
        {"ravlt", FieldKind::Numeric, 0},
        {"apoe4", FieldKind::Categorical, 3},
        {"ethnicity", FieldKind::Categorical, 8},
        {"race", FieldKind::Categorical, 6},
    }};
    return schema;
}

int ContextRecord::present_count() const {
    int n = 0;
    for (const auto& v : values) n += v.has_value() ? 1 : 0;
    return n;
}

nlohmann::json ContextRecord::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    const auto& schema = context_schema();
    for (int f = 0; f < kNumContextFields; ++f) {
        if (!values[f].has_value()) {
            j[schema[f].name] = nullptr;
        } else if (schema[f].kind == FieldKind::Categorical) {
            j[schema[f].name] = static_cast<int>(*values[f]);
        } else {
            j[schema[f].name] = *values[f];
        }
    }
    return j;
}

ContextRecord ContextRecord::from_json(const nlohmann::json& j) {
    ContextRecord rec;
    const auto& schema = context_schema();
    for (int f = 0; f < kNumContextFields; ++f) {
        if (!j.contains(schema[f].name) || j[schema[f].name].is_null()) continue;
        double v = j[schema[f].name].get<double>();
        if (schema[f].kind == FieldKind::Categorical) {
            int code = static_cast<int>(v);
            if (code < 0 || code >= schema[f].categories)
                throw std::invalid_argument(std::string("context field '") + schema[f].name +
                                            "' code out of range: " + std::to_string(code));
            rec.values[f] = static_cast<double>(code);
        } else {
            if (!std::isfinite(v))
                throw std::invalid_argument(std::string("context field '") + schema[f].name +
                                            "' is not finite");
            rec.values[f] = v;
        }
    }
    if (rec.present_count() == 0) throw std::invalid_argument("context record has no present fields");
    return rec;
}

ContextEncoder::ContextEncoder() {
    const auto& schema = context_schema();
    int off = 0;
    for (int f = 0; f < kNumContextFields; ++f) {
        offset_[f] = off;
        off += schema[f].kind == FieldKind::Numeric ? 1 : schema[f].categories;
        mean_[f] = 0.0;
        stddev_[f] = 1.0;
    }
    dim_ = off + kNumContextFields;  // + missingness indicators
}

void ContextEncoder::fit(const std::vector<ContextRecord>& bank) {
    if (bank.empty()) throw std::invalid_argument("ContextEncoder::fit: empty bank");
    const auto& schema = context_schema();
    for (int f = 0; f < kNumContextFields; ++f) {
        if (schema[f].kind != FieldKind::Numeric) continue;
        double sum = 0.0, count = 0.0;
        for (const auto& rec : bank)
            if (rec.present(f)) {
                sum += *rec.values[f];
                count += 1.0;
            }
        double mean = count > 0 ? sum / count : 0.0;
        double ss = 0.0;
        for (const auto& rec : bank)
            if (rec.present(f)) {
                double d = *rec.values[f] - mean;
                ss += d * d;
            }
        double var = count > 0 ? ss / count : 1.0;
        mean_[f] = mean;
        stddev_[f] = var > 1e-12 ? std::sqrt(var) : 1.0;
    }
    fitted_ = true;
}

std::vector<double> ContextEncoder::encode(const ContextRecord& rec) const {
    const auto& schema = context_schema();
    std::vector<double> out(static_cast<size_t>(dim_), 0.0);
    int flag_base = dim_ - kNumContextFields;
    for (int f = 0; f < kNumContextFields; ++f) {
        if (!rec.present(f)) {
            out[flag_base + f] = 1.0;
            continue;
        }
        if (schema[f].kind == FieldKind::Numeric) {
            out[offset_[f]] = (*rec.values[f] - mean_[f]) / stddev_[f];
        } else {
            int code = static_cast<int>(*rec.values[f]);
            if (code < 0 || code >= schema[f].categories)
                throw std::invalid_argument(std::string("encode: field '") + schema[f].name +
                                            "' code out of range");
            out[offset_[f] + code] = 1.0;
        }
    }
    return out;
}

std::pair<int, int> ContextEncoder::field_block(int field) const {
    const auto& schema = context_schema();
    int width = schema[field].kind == FieldKind::Numeric ? 1 : schema[field].categories;
    return {offset_[field], width};
}

nlohmann::json ContextEncoder::stats_json() const {
    nlohmann::json j;
    j["mean"] = mean_;
    j["stddev"] = stddev_;
    j["fitted"] = fitted_;
    return j;
}

ContextEncoder ContextEncoder::from_stats_json(const nlohmann::json& j) {
    ContextEncoder enc;
    auto mean = j.at("mean").get<std::vector<double>>();
    auto stddev = j.at("stddev").get<std::vector<double>>();
    if (mean.size() != kNumContextFields || stddev.size() != kNumContextFields)
        throw std::invalid_argument("encoder stats have wrong field count");
    for (int f = 0; f < kNumContextFields; ++f) {
        enc.mean_[f] = mean[f];
        enc.stddev_[f] = stddev[f];
    }
    enc.fitted_ = j.value("fitted", true);
    return enc;
}

int most_similar_record(const ContextRecord& partial, const std::vector<ContextRecord>& bank,
                        const ContextEncoder& enc) {
    if (bank.empty()) throw std::invalid_argument("most_similar_record: empty bank");
    if (partial.present_count() == 0)
        throw std::invalid_argument("most_similar_record: partial record has no present fields");

    // similarity is computed over the blocks of fields present in `partial`
    std::vector<std::pair<int, int>> blocks;
    for (int f = 0; f < kNumContextFields; ++f)
        if (partial.present(f)) blocks.push_back(enc.field_block(f));

    std::vector<double> pv = enc.encode(partial);
    double pnorm = 0.0;
    for (auto [off, width] : blocks)
        for (int i = 0; i < width; ++i) pnorm += pv[off + i] * pv[off + i];
    pnorm = std::sqrt(pnorm);

    int best = 0;
    double best_sim = -2.0;
    for (size_t r = 0; r < bank.size(); ++r) {
        std::vector<double> bv = enc.encode(bank[r]);
        double dot = 0.0, bnorm = 0.0;
        for (auto [off, width] : blocks)
            for (int i = 0; i < width; ++i) {
                dot += pv[off + i] * bv[off + i];
                bnorm += bv[off + i] * bv[off + i];
            }
        double denom = pnorm * std::sqrt(bnorm);
        double sim = denom > 0.0 ? dot / denom : 0.0;
        if (sim > best_sim) {
            best_sim = sim;
            best = static_cast<int>(r);
        }
    }
    return best;
}

ContextRecord impute_context(const ContextRecord& partial, const std::vector<ContextRecord>& bank,
                             const ContextEncoder& enc) {
    int donor = most_similar_record(partial, bank, enc);
    ContextRecord out = partial;
    for (int f = 0; f < kNumContextFields; ++f)
        if (!out.present(f) && bank[donor].present(f)) out.values[f] = bank[donor].values[f];
    return out;
}

}  // namespace ndram::data
