#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace objrec {

/// The 16 entry-level categories, in response-screen order (row-wise).
enum class Category : std::uint8_t {
  Knife, Bicycle, Bear, Truck, Airplane, Clock, Boat, Car,
  Keyboard, Oven, Cat, Bird, Elephant, Chair, Bottle, Dog,
};

inline constexpr int kNumCategories = 16;
/// Rows of a confusion matrix: 16 responses plus no-response.
inline constexpr int kNumResponses = kNumCategories + 1;

inline constexpr std::array<Category, kNumCategories> kAllCategories = {
    Category::Knife,    Category::Bicycle, Category::Bear,     Category::Truck,
    Category::Airplane, Category::Clock,   Category::Boat,     Category::Car,
    Category::Keyboard, Category::Oven,    Category::Cat,      Category::Bird,
    Category::Elephant, Category::Chair,   Category::Bottle,   Category::Dog,
};

/// A response is a category, or nullopt for "no response" (`na`).
using Response = std::optional<Category>;

std::string_view category_name(Category c) noexcept;
inline int category_index(Category c) noexcept { return static_cast<int>(c); }
std::optional<Category> parse_category(std::string_view name) noexcept;

/// Formats a response; no-response becomes "na".
std::string_view response_name(const Response& r) noexcept;
/// Parses "na", "" or a category name. Throws Error(Ingestion) on unknown tokens.
Response parse_response(std::string_view token);

/// Partial map from ILSVRC-2012 classes (WNID and class index) to
/// entry-level categories.
class CategoryMap {
 public:
  struct Entry {
    int index;
    std::string wnid;
    Category category;
    std::string lemma;
  };

  /// Parses the CSV format of data/category_map.csv.
  static CategoryMap parse(std::string_view csv_text);
  static CategoryMap load(const std::filesystem::path& path);
  /// The mapping shipped with the toolkit, compiled into the library.
  static const CategoryMap& builtin();

  std::optional<Category> map_wnid(std::string_view wnid) const;
  std::optional<Category> map_index(int class_index) const;

  /// Entries sorted by class index.
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::vector<Entry> entries_;
  std::map<std::string, Category, std::less<>> by_wnid_;
  std::map<int, Category> by_index_;
};

/// True for syntactically valid WNIDs ("n" followed by eight digits).
bool is_valid_wnid(std::string_view wnid) noexcept;

}  // namespace objrec
