#include "netmon/panel.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace netmon::data {

std::string to_string(Ownership o) {
  switch (o) {
    case Ownership::for_profit: return "for_profit";
    case Ownership::non_profit: return "non_profit";
    case Ownership::government: return "government";
  }
  return "for_profit";
}

Ownership ownership_from_string(const std::string& name) {
  if (name == "for_profit") return Ownership::for_profit;
  if (name == "non_profit") return Ownership::non_profit;
  if (name == "government") return Ownership::government;
  throw DomainError("unknown ownership '" + name + "'");
}

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> columns = {
      "facility_id", "chain_id",       "county_fips", "state",         "ownership",         "beds",
      "overall_rating", "staffing_rating", "def_total", "def_total_prev", "sff", "sff_candidate"};
  return columns;
}

namespace {

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

}  // namespace

ValidationError::ValidationError(const std::string& summary, std::vector<std::string> problems)
    : DomainError(summary + (problems.empty() ? "" : ": " + join(problems, "; "))), problems_(std::move(problems)) {}

std::vector<std::string> validate_panel(const FacilityPanel& panel) {
  std::vector<std::string> problems;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < panel.records.size(); ++i) {
    const FacilityRecord& r = panel.records[i];
    const std::string row = "row " + std::to_string(i + 1);
    auto flag = [&](const std::string& what) { problems.push_back(row + " (" + r.facility_id + "): " + what); };
    if (r.facility_id.empty()) flag("empty facility_id");
    if (!seen.insert(r.facility_id).second) flag("duplicate facility_id");
    if (r.chain_id && r.chain_id->empty()) flag("chain_id present but empty");
    if (r.county_fips.empty()) flag("empty county_fips");
    if (r.state.empty()) flag("empty state");
    if (r.beds <= 0) flag("beds must be positive");
    if (r.overall_rating < 1 || r.overall_rating > 5) flag("overall_rating " + std::to_string(r.overall_rating) + " outside 1-5");
    if (r.staffing_rating < 1 || r.staffing_rating > 5) flag("staffing_rating " + std::to_string(r.staffing_rating) + " outside 1-5");
    if (r.def_total < 0) flag("def_total negative");
    if (r.def_total_prev < 0) flag("def_total_prev negative");
    if (r.sff != 0 && r.sff != 1) flag("sff must be 0 or 1");
    if (r.sff_candidate != 0 && r.sff_candidate != 1) flag("sff_candidate must be 0 or 1");
  }
  return problems;
}

namespace {

// Splits one CSV line; supports double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

bool parse_int(const std::string& s, int& out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && !s.empty();
}

}  // namespace

FacilityPanel parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty CSV input", {"missing header line"});
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);

  const auto& columns = csv_columns();
  std::vector<int> position(columns.size(), -1);
  std::vector<std::string> problems;
  for (std::size_t h = 0; h < header.size(); ++h) {
    const auto it = std::find(columns.begin(), columns.end(), header[h]);
    if (it == columns.end()) {
      problems.push_back("unknown column '" + header[h] + "' at header position " + std::to_string(h + 1));
    } else {
      position[static_cast<std::size_t>(it - columns.begin())] = static_cast<int>(h);
    }
  }
  std::vector<std::string> missing;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (position[c] < 0) missing.push_back(columns[c]);
  }
  if (!missing.empty()) problems.insert(problems.begin(), "missing columns: " + join(missing, ", "));
  if (!problems.empty()) throw ValidationError("CSV schema mismatch", problems);

  FacilityPanel panel;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      problems.push_back("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                         " fields, got " + std::to_string(fields.size()));
      continue;
    }
    auto field = [&](std::size_t c) -> const std::string& { return fields[static_cast<std::size_t>(position[c])]; };
    auto integer = [&](std::size_t c, int& out) {
      if (!parse_int(field(c), out)) {
        problems.push_back("line " + std::to_string(line_no) + ", column " + columns[c] + ": cannot parse '" +
                           field(c) + "' as an integer");
      }
    };
    FacilityRecord r;
    r.facility_id = field(0);
    if (!field(1).empty()) r.chain_id = field(1);
    r.county_fips = field(2);
    r.state = field(3);
    try {
      r.ownership = ownership_from_string(field(4));
    } catch (const DomainError&) {
      problems.push_back("line " + std::to_string(line_no) + ", column ownership: unknown value '" + field(4) + "'");
    }
    integer(5, r.beds);
    integer(6, r.overall_rating);
    integer(7, r.staffing_rating);
    integer(8, r.def_total);
    integer(9, r.def_total_prev);
    integer(10, r.sff);
    integer(11, r.sff_candidate);
    panel.records.push_back(std::move(r));
  }
  if (!problems.empty()) throw ValidationError("unparseable CSV fields", problems);
  auto violations = validate_panel(panel);
  if (!violations.empty()) throw ValidationError("panel invariant violations", violations);
  return panel;
}

FacilityPanel read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open panel CSV '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::string to_csv(const FacilityPanel& panel) {
  std::vector<const FacilityRecord*> rows;
  rows.reserve(panel.size());
  for (const auto& r : panel.records) rows.push_back(&r);
  std::stable_sort(rows.begin(), rows.end(),
                   [](const FacilityRecord* a, const FacilityRecord* b) { return a->facility_id < b->facility_id; });
  std::string out = join(csv_columns(), ",") + "\n";
  for (const FacilityRecord* r : rows) {
    out += quote_if_needed(r->facility_id) + ',' + quote_if_needed(r->chain_id.value_or("")) + ',' +
           quote_if_needed(r->county_fips) + ',' + quote_if_needed(r->state) + ',' + to_string(r->ownership) + ',' +
           std::to_string(r->beds) + ',' + std::to_string(r->overall_rating) + ',' +
           std::to_string(r->staffing_rating) + ',' + std::to_string(r->def_total) + ',' +
           std::to_string(r->def_total_prev) + ',' + std::to_string(r->sff) + ',' + std::to_string(r->sff_candidate) +
           '\n';
  }
  return out;
}

void write_csv(const FacilityPanel& panel, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write panel CSV '" + path + "'");
  out << to_csv(panel);
  if (!out) throw IoError("failed writing panel CSV '" + path + "'");
}

PanelSummary summarize(const FacilityPanel& panel) {
  PanelSummary s;
  s.facilities = panel.size();
  std::map<std::string, std::map<std::string, std::size_t>> county_own;
  std::map<std::string, std::size_t> own_counts{{"for_profit", 0}, {"non_profit", 0}, {"government", 0}};
  for (const auto& r : panel.records) {
    ++s.county_sizes[r.county_fips];
    ++own_counts[to_string(r.ownership)];
    ++county_own[r.county_fips][to_string(r.ownership)];
    if (r.chain_id) {
      ++s.chain_sizes[*r.chain_id];
      ++s.chain_affiliated;
    }
  }
  s.counties = s.county_sizes.size();
  s.chains = s.chain_sizes.size();
  for (const auto& [name, count] : own_counts) {
    s.ownership_shares[name] = s.facilities ? static_cast<double>(count) / static_cast<double>(s.facilities) : 0.0;
  }
  for (const auto& [county, counts] : county_own) {
    const double total = static_cast<double>(s.county_sizes[county]);
    auto& shares = s.county_ownership[county];
    for (const char* name : {"for_profit", "non_profit", "government"}) {
      const auto it = counts.find(name);
      shares[name] = it == counts.end() ? 0.0 : static_cast<double>(it->second) / total;
    }
  }
  for (const auto& [id, size] : s.county_sizes) ++s.county_size_histogram[size];
  for (const auto& [id, size] : s.chain_sizes) ++s.chain_size_histogram[size];
  return s;
}

}  // namespace netmon::data
