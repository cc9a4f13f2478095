#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "netmon/error.hpp"

namespace netmon::data {

enum class Ownership { for_profit, non_profit, government };

std::string to_string(Ownership o);
Ownership ownership_from_string(const std::string& name);

struct FacilityRecord {
  std::string facility_id;
  std::optional<std::string> chain_id;  // empty CSV field = independent facility
  std::string county_fips;
  std::string state;
  Ownership ownership = Ownership::for_profit;
  int beds = 1;
  int overall_rating = 3;
  int staffing_rating = 3;
  int def_total = 0;
  int def_total_prev = 0;
  int sff = 0;
  int sff_candidate = 0;

  bool operator==(const FacilityRecord&) const = default;
};

struct FacilityPanel {
  std::vector<FacilityRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  bool operator==(const FacilityPanel&) const = default;
};

/// Column order of the CSV schema.
const std::vector<std::string>& csv_columns();

/// Thrown for schema mismatches and invariant violations; carries every
/// problem found, each naming its line/row.
class ValidationError : public DomainError {
 public:
  ValidationError(const std::string& summary, std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Invariant violations (ratings 1-5, counts >= 0, beds > 0, flags 0/1,
/// nonempty ids). Row numbers are 1-based data rows.
std::vector<std::string> validate_panel(const FacilityPanel& panel);

/// Parses a schema-exact CSV. Throws ValidationError listing missing or
/// unknown columns, unparseable fields (line:column) and invariant violations.
FacilityPanel read_csv(const std::string& path);
FacilityPanel parse_csv(const std::string& text);

/// Rows sorted by facility_id, fixed column order, newline-terminated.
std::string to_csv(const FacilityPanel& panel);
void write_csv(const FacilityPanel& panel, const std::string& path);

struct PanelSummary {
  std::size_t facilities = 0;
  std::size_t counties = 0;
  std::size_t chains = 0;
  std::size_t chain_affiliated = 0;
  std::map<std::string, std::size_t> county_sizes;
  std::map<std::string, std::size_t> chain_sizes;
  std::map<std::string, double> ownership_shares;                       // whole panel
  std::map<std::string, std::map<std::string, double>> county_ownership;  // per county
  std::map<std::size_t, std::size_t> county_size_histogram;  // size -> number of counties
  std::map<std::size_t, std::size_t> chain_size_histogram;
};

PanelSummary summarize(const FacilityPanel& panel);

}  // namespace netmon::data
