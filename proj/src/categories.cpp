#include "objrec/categories.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include "objrec/error.hpp"
#include "objrec/util.hpp"

namespace objrec {

// Generated at configure time from data/category_map.csv.
extern const char* const kBuiltinCategoryMapCsv;

namespace {

constexpr std::array<std::string_view, kNumCategories> kNames = {
    "knife", "bicycle", "bear", "truck", "airplane", "clock", "boat", "car",
    "keyboard", "oven", "cat", "bird", "elephant", "chair", "bottle", "dog",
};

}  // namespace

std::string_view category_name(Category c) noexcept {
  return kNames[static_cast<std::size_t>(c)];
}

std::optional<Category> parse_category(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<Category>(i);
  }
  return std::nullopt;
}

std::string_view response_name(const Response& r) noexcept {
  return r ? category_name(*r) : std::string_view("na");
}

Response parse_response(std::string_view token) {
  token = trim(token);
  if (token.empty() || token == "na" || token == "NA") return std::nullopt;
  if (auto c = parse_category(token)) return c;
  throw Error(ErrorKind::Ingestion, "unknown category token '" + std::string(token) + "'");
}

bool is_valid_wnid(std::string_view wnid) noexcept {
  if (wnid.size() != 9 || wnid[0] != 'n') return false;
  for (std::size_t i = 1; i < wnid.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(wnid[i]))) return false;
  }
  return true;
}

CategoryMap CategoryMap::parse(std::string_view csv_text) {
  CategoryMap map;
  std::istringstream in{std::string(csv_text)};
  std::string line;
  bool header_seen = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto fields = split_csv_line(trimmed);
    if (fields.size() < 3) {
      throw Error(ErrorKind::InvalidInput,
                  "category map line " + std::to_string(line_no) + ": expected index,wnid,category");
    }
    Entry e;
    const auto& idx = fields[0];
    if (std::from_chars(idx.data(), idx.data() + idx.size(), e.index).ec != std::errc{} ||
        e.index < 0 || e.index >= 1000) {
      throw Error(ErrorKind::InvalidInput,
                  "category map line " + std::to_string(line_no) + ": bad class index");
    }
    e.wnid = fields[1];
    if (!is_valid_wnid(e.wnid)) {
      throw Error(ErrorKind::InvalidInput,
                  "category map line " + std::to_string(line_no) + ": bad wnid '" + e.wnid + "'");
    }
    auto cat = parse_category(fields[2]);
    if (!cat) {
      throw Error(ErrorKind::InvalidInput, "category map line " + std::to_string(line_no) +
                                               ": unknown category '" + fields[2] + "'");
    }
    e.category = *cat;
    if (fields.size() > 3) e.lemma = fields[3];
    if (map.by_wnid_.contains(e.wnid) || map.by_index_.contains(e.index)) {
      throw Error(ErrorKind::InvalidInput, "category map: duplicate entry for " + e.wnid);
    }
    map.by_wnid_.emplace(e.wnid, e.category);
    map.by_index_.emplace(e.index, e.category);
    map.entries_.push_back(std::move(e));
  }
  std::sort(map.entries_.begin(), map.entries_.end(),
            [](const Entry& a, const Entry& b) { return a.index < b.index; });
  return map;
}

CategoryMap CategoryMap::load(const std::filesystem::path& path) {
  return parse(read_text_file(path));
}

const CategoryMap& CategoryMap::builtin() {
  static const CategoryMap map = parse(kBuiltinCategoryMapCsv);
  return map;
}

std::optional<Category> CategoryMap::map_wnid(std::string_view wnid) const {
  auto it = by_wnid_.find(wnid);
  if (it == by_wnid_.end()) return std::nullopt;
  return it->second;
}

std::optional<Category> CategoryMap::map_index(int class_index) const {
  auto it = by_index_.find(class_index);
  if (it == by_index_.end()) return std::nullopt;
  return it->second;
}

}  // namespace objrec
