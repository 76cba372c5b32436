#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "tabppo/data.hpp"

namespace tabppo::data {
namespace {

std::optional<double> parse_number(std::string_view text) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    if (text.empty()) return std::nullopt;
    if (text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) return std::nullopt;
    return value;
}

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::size_t column_index(const CsvTable& table, const std::string& name) {
    auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) throw SchemaError("missing column '" + name + "'");
    return static_cast<std::size_t>(it - table.header.begin());
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

CsvOptions ton_iot_options() {
    CsvOptions o;
    o.label_column = "type";
    o.categorical_columns = {"src_port",        "dst_port",        "proto",           "service",
                             "conn_state",      "dns_query",       "dns_qclass",      "dns_qtype",
                             "dns_rcode",       "dns_AA",          "dns_RD",          "dns_RA",
                             "dns_rejected",    "ssl_version",     "ssl_cipher",      "ssl_resumed",
                             "ssl_established", "ssl_subject",     "ssl_issuer",      "http_trans_depth",
                             "http_method",     "http_uri",        "http_version",    "http_status_code",
                             "http_user_agent", "http_orig_mime_types", "http_resp_mime_types", "weird_name",
                             "weird_addl",      "weird_notice"};
    o.numerical_columns = {"duration",     "src_bytes",    "dst_bytes",   "missed_bytes",          "src_pkts",
                           "src_ip_bytes", "dst_pkts",     "dst_ip_bytes", "http_request_body_len",
                           "http_response_body_len"};
    return o;
}

std::vector<std::string> parse_csv_line(std::string_view line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else {
            cell += c;
        }
    }
    cells.push_back(std::move(cell));
    return cells;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = parse_csv_line(line);
        if (table.header.empty()) {
            table.header = std::move(cells);
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw InputError(path.string() + " line " + std::to_string(line_no) + ": expected " +
                             std::to_string(table.header.size()) + " cells, found " + std::to_string(cells.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    if (table.header.empty()) throw InputError(path.string() + " is empty");
    if (table.rows.empty()) throw InputError(path.string() + " has a header but no data rows");
    return table;
}

PreparedData load_csv(const std::filesystem::path& path, const CsvOptions& options) {
    const CsvTable table = read_csv(path);
    const std::size_t label_col = column_index(table, options.label_column);

    std::set<std::string> seen;
    for (const auto& h : table.header)
        if (!seen.insert(h).second) throw SchemaError("duplicate column '" + h + "'");

    std::vector<std::size_t> cat_cols, num_cols;
    std::set<std::size_t> assigned{label_col};
    for (const auto& name : options.categorical_columns) {
        cat_cols.push_back(column_index(table, name));
        assigned.insert(cat_cols.back());
    }
    for (const auto& name : options.numerical_columns) {
        num_cols.push_back(column_index(table, name));
        if (!assigned.insert(num_cols.back()).second) {
            throw SchemaError("column '" + name + "' declared twice or is the label column");
        }
    }
    const bool infer = options.categorical_columns.empty() && options.numerical_columns.empty();
    for (std::size_t col = 0; col < table.header.size(); ++col) {
        if (assigned.count(col)) continue;
        if (infer) {
            const bool numeric = std::all_of(table.rows.begin(), table.rows.end(),
                                             [col](const auto& row) { return parse_number(row[col]).has_value(); });
            (numeric ? num_cols : cat_cols).push_back(col);
        } else if (options.categorical_columns.empty()) {
            cat_cols.push_back(col);
        } else if (options.numerical_columns.empty()) {
            num_cols.push_back(col);
        }
    }

    const std::size_t n = table.rows.size();
    const std::size_t m = num_cols.size();
    num::Tensor numerical({n, m});
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < m; ++j) {
            auto v = parse_number(table.rows[r][num_cols[j]]);
            if (!v) {
                throw InputError("row " + std::to_string(r + 1) + ": cannot parse numeric column '" +
                                 table.header[num_cols[j]] + "' value '" + table.rows[r][num_cols[j]] + "'");
            }
            numerical[r * m + j] = *v;
        }
    }

    std::set<std::string> label_set;
    for (const auto& row : table.rows) label_set.insert(row[label_col]);
    auto schema = std::make_shared<FeatureSchema>();
    schema->labels.assign(label_set.begin(), label_set.end());
    std::vector<std::uint32_t> labels(n);
    for (std::size_t r = 0; r < n; ++r) labels[r] = *schema->label_index(table.rows[r][label_col]);

    PreparedData out;
    auto part = stratified_partition(labels, options.train_fraction, options.split_seed, schema->labels);
    out.warnings = std::move(part.warnings);
    const auto& train_rows = part.train_rows;

    for (auto col : cat_cols) {
        CategoricalField field;
        field.name = table.header[col];
        for (auto r : train_rows) field.add(table.rows[r][col]);
        schema->categorical.push_back(std::move(field));
    }
    for (auto col : num_cols) schema->numerical.push_back({table.header[col], 0.0, 1.0});
    schema->validate();

    Dataset raw;
    raw.schema = schema;
    raw.rows = n;
    raw.numerical = std::move(numerical);
    raw.labels = std::move(labels);
    raw.categorical.reserve(n * cat_cols.size());
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t f = 0; f < cat_cols.size(); ++f)
            raw.categorical.push_back(schema->categorical[f].lookup(table.rows[r][cat_cols[f]]));

    Dataset train = raw.subset(train_rows);
    Dataset test = raw.subset(part.test_rows);
    auto fitted = std::make_shared<const FeatureSchema>(fit_standardization(*schema, train));
    out.schema = fitted;
    out.train = standardize(train, fitted);
    out.test = standardize(test, fitted);
    return out;
}

Dataset encode_csv(const std::filesystem::path& path, const std::string& label_column,
                   std::shared_ptr<const FeatureSchema> schema) {
    const CsvTable table = read_csv(path);
    std::vector<std::string> problems;
    auto find = [&](const std::string& name) -> std::optional<std::size_t> {
        auto it = std::find(table.header.begin(), table.header.end(), name);
        if (it == table.header.end()) return std::nullopt;
        return static_cast<std::size_t>(it - table.header.begin());
    };
    std::set<std::string> expected{label_column};
    std::vector<std::size_t> cat_cols, num_cols;
    for (const auto& f : schema->categorical) {
        expected.insert(f.name);
        if (auto c = find(f.name)) cat_cols.push_back(*c);
        else problems.push_back("missing categorical column '" + f.name + "'");
    }
    for (const auto& f : schema->numerical) {
        expected.insert(f.name);
        if (auto c = find(f.name)) num_cols.push_back(*c);
        else problems.push_back("missing numerical column '" + f.name + "'");
    }
    auto label_col = find(label_column);
    if (!label_col) problems.push_back("missing label column '" + label_column + "'");
    for (const auto& h : table.header)
        if (!expected.count(h)) problems.push_back("unexpected column '" + h + "'");
    if (!problems.empty()) {
        std::string msg = "dataset does not match model schema:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw SchemaError(msg);
    }

    Dataset ds;
    ds.schema = schema;
    ds.rows = table.rows.size();
    const std::size_t m = num_cols.size();
    ds.numerical = num::Tensor({ds.rows, m});
    for (std::size_t r = 0; r < ds.rows; ++r) {
        const auto& row = table.rows[r];
        for (std::size_t f = 0; f < cat_cols.size(); ++f)
            ds.categorical.push_back(schema->categorical[f].lookup(row[cat_cols[f]]));
        for (std::size_t j = 0; j < m; ++j) {
            auto v = parse_number(row[num_cols[j]]);
            if (!v) {
                throw InputError("row " + std::to_string(r + 1) + ": cannot parse numeric column '" +
                                 schema->numerical[j].name + "' value '" + row[num_cols[j]] + "'");
            }
            ds.numerical[r * m + j] = (*v - schema->numerical[j].mean) / schema->numerical[j].std;
        }
        auto y = schema->label_index(row[*label_col]);
        if (!y) throw InputError("row " + std::to_string(r + 1) + ": unknown label '" + row[*label_col] + "'");
        ds.labels.push_back(*y);
    }
    return ds;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path, const std::string& label_column) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    const auto& s = *ds.schema;
    std::vector<std::string> header;
    for (const auto& f : s.categorical) header.push_back(csv_escape(f.name));
    for (const auto& f : s.numerical) header.push_back(csv_escape(f.name));
    header.push_back(csv_escape(label_column));
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    const Dataset raw = destandardize(ds);
    const std::size_t c = s.n_categorical(), m = s.n_numerical();
    for (std::size_t r = 0; r < raw.rows; ++r) {
        for (std::size_t f = 0; f < c; ++f) out << csv_escape(s.categorical[f].value_at(raw.categorical[r * c + f])) << ',';
        for (std::size_t j = 0; j < m; ++j) out << format_number(raw.numerical[r * m + j]) << ',';
        out << csv_escape(s.labels[raw.labels[r]]) << '\n';
    }
}

}  // namespace tabppo::data
