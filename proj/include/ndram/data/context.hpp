#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace ndram::data {

// Non-imaging per-case fields. Categorical values are stored as small integer
// codes; every field is optional, with absence meaning "missing".
enum ContextField : int {
    kAge = 0,
    kGender,
    kEducation,
    kCdrsb,
    kAdas11,
    kAdas13,
    kRavlt,
    kApoe4,
    kEthnicity,
    kRace,
    kNumContextFields,
};

enum class FieldKind { Numeric, Categorical };

struct FieldSpec {
    const char* name;
    FieldKind kind;
    int categories;  // 0 for numeric fields
};

// schema order matches the ContextField enum
const std::array<FieldSpec, kNumContextFields>& context_schema();

struct ContextRecord {
    std::array<std::optional<double>, kNumContextFields> values;

    bool present(int field) const { return values[field].has_value(); }
    int present_count() const;

    nlohmann::json to_json() const;
    static ContextRecord from_json(const nlohmann::json& j);
};

// Fixed vector layout for the network and for cosine similarity: per field,
// numeric fields contribute one standardized slot and categorical fields a
// one-hot block; a trailing per-field missingness indicator closes the vector.
// Missing fields encode as zeros in their block.
class ContextEncoder {
public:
    ContextEncoder();

    // numeric standardization stats from the training bank
    void fit(const std::vector<ContextRecord>& bank);

    int dim() const { return dim_; }
    std::vector<double> encode(const ContextRecord& rec) const;

    // block of the encoded vector belonging to one field (offset, width)
    std::pair<int, int> field_block(int field) const;

    nlohmann::json stats_json() const;
    static ContextEncoder from_stats_json(const nlohmann::json& j);

private:
    std::array<double, kNumContextFields> mean_{};
    std::array<double, kNumContextFields> stddev_{};
    std::array<int, kNumContextFields> offset_{};
    int dim_ = 0;
    bool fitted_ = false;
};

// Donor record index: the bank entry maximizing cosine similarity over the
// blocks of fields present in `partial` (encoded and standardized); ties break
// to the lowest index.
int most_similar_record(const ContextRecord& partial, const std::vector<ContextRecord>& bank,
                        const ContextEncoder& enc);

// Fills each missing field of `partial` from the most similar bank record.
// Present fields are never overwritten.
ContextRecord impute_context(const ContextRecord& partial, const std::vector<ContextRecord>& bank,
                             const ContextEncoder& enc);

}  // namespace ndram::data
