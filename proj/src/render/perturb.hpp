#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pixeltext {

// Character confusion table driving orthographic perturbation: per-character
// substitution candidates (which may be multi-character, e.g. "a" -> "ah")
// plus the set of enabled operations. Shipped as a versioned PXCT text
// resource; the default is compiled in.
struct ConfusionTable {
    std::string version;
    bool op_substitute = true;
    bool op_duplicate = true;
    bool op_delete = true;
    std::map<char32_t, std::vector<std::u32string>> substitutions;

    static const ConfusionTable& embedded();
    static ConfusionTable parse(const std::string& content, const std::string& origin);
    static ConfusionTable load_file(const std::string& path);

    std::size_t enabled_op_count() const {
        return (op_substitute ? 1u : 0u) + (op_duplicate ? 1u : 0u) + (op_delete ? 1u : 0u);
    }
};

// Independently perturbs each character with probability `rate`, drawing the
// operation uniformly from the table's enabled set. Substitution for a
// character with no candidates leaves it unchanged. Seeded and reproducible.
std::string perturb_text(const std::string& text, double rate, std::uint64_t seed,
                         const ConfusionTable& table = ConfusionTable::embedded());

}  // namespace pixeltext
