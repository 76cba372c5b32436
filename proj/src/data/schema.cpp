#include <cmath>
#include <fstream>
#include <set>

#include "tabppo/data.hpp"

namespace tabppo::data {

std::uint32_t CategoricalField::lookup(std::string_view value) const {
    auto it = index_.find(std::string(value));
    return it == index_.end() ? 0U : it->second;
}

std::uint32_t CategoricalField::add(const std::string& value) {
    if (auto found = lookup(value)) return found;
    values.push_back(value);
    const auto idx = static_cast<std::uint32_t>(values.size());
    index_.emplace(value, idx);
    return idx;
}

const std::string& CategoricalField::value_at(std::uint32_t index) const {
    static const std::string unknown = "<unk>";
    if (index == 0 || index > values.size()) return unknown;
    return values[index - 1];
}

void CategoricalField::rebuild_index() {
    index_.clear();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!index_.emplace(values[i], static_cast<std::uint32_t>(i + 1)).second) {
            throw SchemaError("duplicate vocabulary value '" + values[i] + "' in field " + name);
        }
    }
}

std::optional<std::uint32_t> FeatureSchema::label_index(std::string_view name) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == name) return static_cast<std::uint32_t>(i);
    return std::nullopt;
}

void FeatureSchema::validate() const {
    std::set<std::string> names;
    for (const auto& f : categorical)
        if (!names.insert(f.name).second) throw SchemaError("duplicate field name: " + f.name);
    for (const auto& f : numerical) {
        if (!names.insert(f.name).second) throw SchemaError("duplicate field name: " + f.name);
        if (!(f.std > 0.0) || !std::isfinite(f.std) || !std::isfinite(f.mean)) {
            throw SchemaError("invalid standardisation statistics for field " + f.name);
        }
    }
    if (labels.empty()) throw SchemaError("schema declares no labels");
    std::set<std::string> label_names(labels.begin(), labels.end());
    if (label_names.size() != labels.size()) throw SchemaError("duplicate label names");
    if (categorical.empty() && numerical.empty()) throw SchemaError("schema declares no feature columns");
}

std::vector<std::string> FeatureSchema::layout_diff(const FeatureSchema& other) const {
    std::vector<std::string> out;
    auto compare_names = [&](const char* kind, const std::vector<std::string>& a, const std::vector<std::string>& b) {
        const std::size_t n = std::max(a.size(), b.size());
        for (std::size_t i = 0; i < n; ++i) {
            const std::string lhs = i < a.size() ? a[i] : "<missing>";
            const std::string rhs = i < b.size() ? b[i] : "<missing>";
            if (lhs != rhs) {
                out.push_back(std::string(kind) + "[" + std::to_string(i) + "]: expected '" + lhs + "', found '" +
                              rhs + "'");
            }
        }
    };
    std::vector<std::string> ca, cb, na, nb;
    for (const auto& f : categorical) ca.push_back(f.name);
    for (const auto& f : other.categorical) cb.push_back(f.name);
    for (const auto& f : numerical) na.push_back(f.name);
    for (const auto& f : other.numerical) nb.push_back(f.name);
    compare_names("categorical", ca, cb);
    compare_names("numerical", na, nb);
    compare_names("label", labels, other.labels);
    return out;
}

nlohmann::json FeatureSchema::to_json() const {
    nlohmann::json j;
    j["categorical"] = nlohmann::json::array();
    for (const auto& f : categorical) j["categorical"].push_back({{"name", f.name}, {"vocabulary", f.values}});
    j["numerical"] = nlohmann::json::array();
    for (const auto& f : numerical) j["numerical"].push_back({{"name", f.name}, {"mean", f.mean}, {"std", f.std}});
    j["labels"] = labels;
    return j;
}

FeatureSchema FeatureSchema::from_json(const nlohmann::json& j) {
    FeatureSchema s;
    try {
        for (const auto& f : j.at("categorical")) {
            CategoricalField field;
            field.name = f.at("name").get<std::string>();
            field.values = f.at("vocabulary").get<std::vector<std::string>>();
            field.rebuild_index();
            s.categorical.push_back(std::move(field));
        }
        for (const auto& f : j.at("numerical")) {
            s.numerical.push_back({f.at("name").get<std::string>(), f.at("mean").get<double>(), f.at("std").get<double>()});
        }
        s.labels = j.at("labels").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed schema: ") + e.what());
    }
    s.validate();
    return s;
}

void FeatureSchema::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write schema file " + path.string());
    out << to_json().dump(2) << '\n';
}

FeatureSchema FeatureSchema::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open schema file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("schema file " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(j);
}

bool FeatureSchema::operator==(const FeatureSchema& other) const { return to_json() == other.to_json(); }

}  // namespace tabppo::data
