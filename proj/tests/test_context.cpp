#include <cmath>

#include "doctest.h"
#include "ndram/data/context.hpp"
#include "ndram/rng.hpp"

using namespace ndram;
using namespace ndram::data;

namespace {

ContextRecord full_record(Rng& rng) {
    ContextRecord r;
    const auto& schema = context_schema();
    for (int f = 0; f < kNumContextFields; ++f) {
        if (schema[f].kind == FieldKind::Numeric)
            r.values[f] = rng.uniform(-10.0, 50.0);
        else
            r.values[f] = static_cast<double>(rng.uniform_int(0, schema[f].categories - 1));
    }
    return r;
}

// independent enumeration: cosine over the encoded blocks of fields present
// in the partial record
int brute_force_best(const ContextRecord& partial, const std::vector<ContextRecord>& bank,
                     const ContextEncoder& enc) {
    std::vector<double> pv = enc.encode(partial);
    int best = 0;
    double best_sim = -2.0;
    for (size_t r = 0; r < bank.size(); ++r) {
        std::vector<double> bv = enc.encode(bank[r]);
        double dot = 0, pn = 0, bn = 0;
        for (int f = 0; f < kNumContextFields; ++f) {
            if (!partial.present(f)) continue;
            auto [off, width] = enc.field_block(f);
            for (int i = 0; i < width; ++i) {
                dot += pv[off + i] * bv[off + i];
                pn += pv[off + i] * pv[off + i];
                bn += bv[off + i] * bv[off + i];
            }
        }
        double sim = (pn > 0 && bn > 0) ? dot / (std::sqrt(pn) * std::sqrt(bn)) : 0.0;
        if (sim > best_sim) {
            best_sim = sim;
            best = static_cast<int>(r);
        }
    }
    return best;
}

}  // namespace

TEST_CASE("context json round trip with nulls for missing fields") {
    Rng rng(1);
    ContextRecord r = full_record(rng);
    r.values[kAdas13].reset();
    r.values[kRace].reset();
    auto j = r.to_json();
    CHECK(j["adas13"].is_null());
    CHECK(j["race"].is_null());
    ContextRecord back = ContextRecord::from_json(j);
    for (int f = 0; f < kNumContextFields; ++f) {
        CHECK(back.present(f) == r.present(f));
        if (r.present(f)) CHECK(*back.values[f] == doctest::Approx(*r.values[f]).epsilon(1e-12));
    }
    CHECK_THROWS_AS(ContextRecord::from_json(nlohmann::json::object()), std::invalid_argument);
}

TEST_CASE("encoder: standardization over the bank and missing flags") {
    Rng rng(2);
    std::vector<ContextRecord> bank;
    for (int i = 0; i < 50; ++i) bank.push_back(full_record(rng));
    ContextEncoder enc;
    enc.fit(bank);

    // standardized numeric slots have mean ~0, variance ~1 over the bank
    auto [age_off, age_w] = enc.field_block(kAge);
    CHECK(age_w == 1);
    double m = 0, ss = 0;
    for (const auto& r : bank) m += enc.encode(r)[age_off];
    m /= 50.0;
    for (const auto& r : bank) {
        double d = enc.encode(r)[age_off] - m;
        ss += d * d;
    }
    CHECK(std::abs(m) < 1e-10);
    CHECK(std::abs(ss / 50.0 - 1.0) < 1e-10);

    // missing field encodes as zeros plus a raised indicator
    ContextRecord r = bank[0];
    r.values[kAge].reset();
    auto v = enc.encode(r);
    CHECK(v[age_off] == 0.0);
    CHECK(v[enc.dim() - kNumContextFields + kAge] == 1.0);

    // categorical one-hot
    auto [eth_off, eth_w] = enc.field_block(kEthnicity);
    CHECK(eth_w == 8);
    ContextRecord c = bank[0];
    c.values[kEthnicity] = 5.0;
    auto vc = enc.encode(c);
    for (int i = 0; i < 8; ++i) CHECK(vc[eth_off + i] == (i == 5 ? 1.0 : 0.0));
}

TEST_CASE("impute: exact shared-field match is chosen with similarity 1") {
    Rng rng(3);
    std::vector<ContextRecord> bank;
    for (int i = 0; i < 10; ++i) bank.push_back(full_record(rng));
    ContextEncoder enc;
    enc.fit(bank);

    ContextRecord partial;
    partial.values[kAge] = bank[7].values[kAge];
    partial.values[kCdrsb] = bank[7].values[kCdrsb];
    partial.values[kGender] = bank[7].values[kGender];
    CHECK(most_similar_record(partial, bank, enc) == 7);

    ContextRecord filled = impute_context(partial, bank, enc);
    CHECK(*filled.values[kRavlt] == *bank[7].values[kRavlt]);
    CHECK(*filled.values[kEthnicity] == *bank[7].values[kEthnicity]);
    // present fields never overwritten
    CHECK(*filled.values[kAge] == *partial.values[kAge]);
}

TEST_CASE("impute: orthogonal record never beats a positive-similarity one") {
    std::vector<ContextRecord> bank(2);
    // bank 0 orthogonal to the partial on the shared numeric pair
    bank[0].values[kAge] = 1.0;
    bank[0].values[kCdrsb] = -1.0;
    bank[0].values[kRavlt] = 9.0;
    bank[1].values[kAge] = 1.0;
    bank[1].values[kCdrsb] = 1.0;
    bank[1].values[kRavlt] = 3.0;

    ContextEncoder enc;  // identity standardization (unfitted stats)
    ContextRecord partial;
    partial.values[kAge] = 1.0;
    partial.values[kCdrsb] = 1.0;
    CHECK(most_similar_record(partial, bank, enc) == 1);

    CHECK_THROWS_AS(most_similar_record(partial, {}, enc), std::invalid_argument);
}

TEST_CASE("impute: ties break to the lowest bank index") {
    std::vector<ContextRecord> bank(3);
    for (auto& r : bank) {
        r.values[kAge] = 2.0;
        r.values[kCdrsb] = 2.0;
    }
    bank[0].values[kRavlt] = 11.0;
    ContextEncoder enc;
    ContextRecord partial;
    partial.values[kAge] = 4.0;
    partial.values[kCdrsb] = 4.0;
    CHECK(most_similar_record(partial, bank, enc) == 0);
}

TEST_CASE("impute: agrees with brute-force enumeration on randomized partials") {
    Rng rng(44);
    std::vector<ContextRecord> bank;
    for (int i = 0; i < 25; ++i) bank.push_back(full_record(rng));
    ContextEncoder enc;
    enc.fit(bank);

    for (int trial = 0; trial < 100; ++trial) {
        ContextRecord partial = full_record(rng);
        int drop = rng.uniform_int(1, kNumContextFields - 1);
        for (int d = 0; d < drop; ++d)
            partial.values[rng.uniform_int(0, kNumContextFields - 1)].reset();
        if (partial.present_count() == 0) partial.values[kAge] = 70.0;

        CHECK(most_similar_record(partial, bank, enc) == brute_force_best(partial, bank, enc));
    }
}
