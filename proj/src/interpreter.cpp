#include "lifg/interpreter.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "lifg/error.hpp"
#include "lifg/parallel.hpp"

namespace lifg {

namespace {

constexpr char kMagic[8] = {'L', 'I', 'F', 'G', 'E', 'S', 'A', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

bool posting_order(const Posting& a, const Posting& b) {
  if (a.weight != b.weight) return a.weight > b.weight;
  return a.concept_index < b.concept_index;
}

// Little-endian fixed-width encoding, independent of host byte order.
class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u32(std::uint32_t v) { bytes(v, 4); }
  void u64(std::uint64_t v) { bytes(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  void bytes(std::uint64_t v, int n) {
    char buf[8];
    for (int i = 0; i < n; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out_.write(buf, n);
  }
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, const std::filesystem::path& path) : in_(in), path_(path) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(bytes(4)); }
  std::uint64_t u64() { return bytes(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint64_t n = u64();
    if (n > (1ULL << 32)) fail("string length out of range");
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    if (!in_) fail("truncated file");
    return s;
  }
  [[noreturn]] void fail(const std::string& what) {
    throw DataError(path_.string() + ": " + what);
  }

 private:
  std::uint64_t bytes(int n) {
    unsigned char buf[8];
    in_.read(reinterpret_cast<char*>(buf), n);
    if (!in_) fail("truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }
  std::istream& in_;
  const std::filesystem::path& path_;
};

}  // namespace

double SemanticVector::weight(std::string_view concept_id) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), concept_id,
                             [](const auto& e, std::string_view id) { return e.first < id; });
  return it != entries.end() && it->first == concept_id ? it->second : 0.0;
}

SemanticInterpreter SemanticInterpreter::build(std::string language,
                                               std::vector<ConceptDocument> documents,
                                               std::size_t k_term) {
  if (k_term < 1) throw InvalidArgument("k_term must be at least 1");
  std::sort(documents.begin(), documents.end(),
            [](const auto& a, const auto& b) { return a.concept_id < b.concept_id; });
  for (std::size_t i = 1; i < documents.size(); ++i)
    if (documents[i].concept_id == documents[i - 1].concept_id)
      throw DataError("duplicate concept \"" + documents[i].concept_id + "\" in interpreter input");

  SemanticInterpreter si;
  si.language_ = std::move(language);
  si.k_term_ = k_term;
  si.concepts_.reserve(documents.size());
  for (const auto& d : documents) si.concepts_.push_back(d.concept_id);

  for (const auto& d : documents)
    for (const auto& [term, count] : d.counts)
      if (count > 0) ++si.df_[term];

  const double n = static_cast<double>(documents.size());
  for (std::uint32_t c = 0; c < documents.size(); ++c) {
    for (const auto& [term, count] : documents[c].counts) {
      if (count == 0) continue;
      const double idf = std::log(n / static_cast<double>(si.df_[term]));
      const double w = static_cast<double>(count) * idf;
      if (w > 0.0) si.index_[term].push_back({c, w});
    }
  }
  for (auto& [term, list] : si.index_) {
    if (list.size() > k_term) {
      std::partial_sort(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(k_term), list.end(),
                        posting_order);
      list.resize(k_term);
    } else {
      std::sort(list.begin(), list.end(), posting_order);
    }
    list.shrink_to_fit();
  }
  return si;
}

std::uint64_t SemanticInterpreter::df(std::string_view term) const {
  auto it = df_.find(std::string(term));
  return it == df_.end() ? 0 : it->second;
}

std::span<const Posting> SemanticInterpreter::postings(std::string_view term) const {
  auto it = index_.find(std::string(term));
  if (it == index_.end()) return {};
  return it->second;
}

void SemanticInterpreter::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  Writer w(out);
  w.u32(kFormatVersion);
  w.str(language_);
  w.u64(k_term_);
  w.u64(concepts_.size());
  for (const auto& c : concepts_) w.str(c);

  std::vector<const std::string*> terms;
  terms.reserve(df_.size());
  for (const auto& [term, _] : df_) terms.push_back(&term);
  std::sort(terms.begin(), terms.end(), [](auto* a, auto* b) { return *a < *b; });
  w.u64(terms.size());
  for (const auto* term : terms) {
    w.str(*term);
    w.u64(df_.at(*term));
    const auto list = postings(*term);
    w.u64(list.size());
    for (const auto& p : list) {
      w.u32(p.concept_index);
      w.f64(p.weight);
    }
  }
  if (!out) throw IoError("write failure on " + path.string());
}

SemanticInterpreter SemanticInterpreter::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Reader r(in, path);
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) r.fail("not an interpreter file");
  if (const auto version = r.u32(); version != kFormatVersion)
    r.fail("unsupported interpreter format version " + std::to_string(version));

  SemanticInterpreter si;
  si.language_ = r.str();
  si.k_term_ = r.u64();
  const std::uint64_t n_concepts = r.u64();
  for (std::uint64_t i = 0; i < n_concepts; ++i) si.concepts_.push_back(r.str());
  const std::uint64_t n_terms = r.u64();
  si.df_.reserve(n_terms);
  for (std::uint64_t i = 0; i < n_terms; ++i) {
    std::string term = r.str();
    si.df_[term] = r.u64();
    const std::uint64_t len = r.u64();
    if (len == 0) continue;
    auto& list = si.index_[term];
    list.reserve(len);
    for (std::uint64_t j = 0; j < len; ++j) {
      Posting p;
      p.concept_index = r.u32();
      p.weight = r.f64();
      if (p.concept_index >= n_concepts) r.fail("posting references unknown concept");
      list.push_back(p);
    }
  }
  return si;
}

std::vector<ConceptDocument> collect_concept_documents(const ConceptTable& concepts,
                                                       const SupportIndex& idx,
                                                       const std::string& language,
                                                       std::span<const NodeId> retained,
                                                       const Tokenizer& tokenizer,
                                                       unsigned workers) {
  std::vector<ConceptDocument> docs(retained.size());
  parallel_for(retained.size(), workers, [&](std::size_t i) {
    const NodeId n = retained[i];
    ConceptDocument& d = docs[i];
    d.concept_id = concepts.id(n);
    const auto articles = idx.articles(n, language);
    if (!articles.empty()) {
      for (const auto& a : articles) accumulate_counts(d.counts, tokenizer(a.text, language));
    } else if (const TermCountTable* table = idx.virtual_document(n, language)) {
      for (const auto& [term, count] : table->terms) d.counts[term] += count;
    } else {
      throw DataError("concept \"" + d.concept_id + "\" has no support in language " + language);
    }
  });
  return docs;
}

SemanticInterpreter build_interpreter(const ConceptTable& concepts, const SupportIndex& idx,
                                      const std::string& language,
                                      std::span<const NodeId> retained, std::size_t k_term,
                                      const Tokenizer& tokenizer, unsigned workers) {
  if (k_term < 1) throw InvalidArgument("k_term must be at least 1");
  return SemanticInterpreter::build(
      language, collect_concept_documents(concepts, idx, language, retained, tokenizer, workers),
      k_term);
}

SemanticVector interpret(const SemanticInterpreter& si, const TokenStream& doc) {
  SemanticVector out;
  if (doc.empty()) return out;

  // Group repeated tokens; first-occurrence order keeps summation deterministic.
  std::unordered_map<std::string_view, std::size_t> slot;
  std::vector<std::pair<std::string_view, std::uint64_t>> distinct;
  for (const auto& t : doc.tokens) {
    auto [it, inserted] = slot.emplace(t, distinct.size());
    if (inserted) distinct.emplace_back(t, 0);
    ++distinct[it->second].second;
  }

  std::unordered_map<std::uint32_t, double> sums;
  for (const auto& [term, count] : distinct)
    for (const Posting& p : si.postings(term)) sums[p.concept_index] += static_cast<double>(count) * p.weight;

  std::vector<std::pair<std::uint32_t, double>> ordered(sums.begin(), sums.end());
  std::sort(ordered.begin(), ordered.end());
  const double scale = static_cast<double>(doc.size());
  const auto universe = si.concept_universe();
  out.entries.reserve(ordered.size());
  for (const auto& [c, sum] : ordered) {
    const double w = sum / scale;
    if (w > 0.0) out.entries.emplace_back(universe[c], w);
  }
  return out;
}

ConceptFeatureSet top_k_features(const SemanticVector& v, std::size_t k_doc,
                                 std::string_view language) {
  if (k_doc < 1) throw InvalidArgument("k_doc must be at least 1");
  ConceptFeatureSet out;
  out.source_language = std::string(language);
  std::vector<const std::pair<std::string, double>*> ranked;
  ranked.reserve(v.entries.size());
  for (const auto& e : v.entries)
    if (e.second > 0.0) ranked.push_back(&e);
  const std::size_t k = std::min(k_doc, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end(),
                    [](auto* a, auto* b) {
                      if (a->second != b->second) return a->second > b->second;
                      return a->first < b->first;
                    });
  for (std::size_t i = 0; i < k; ++i) out.concepts.insert(ranked[i]->first);
  return out;
}

ConceptFeatureSet generate_basic_features(const InterpreterSet& interpreters,
                                          const LabeledDocument& doc, std::size_t k_doc,
                                          const Tokenizer& tokenizer) {
  auto it = interpreters.find(doc.language);
  if (it == interpreters.end()) throw DataError("no interpreter for " + doc.language);
  return top_k_features(interpret(it->second, tokenizer(doc.text, doc.language)), k_doc,
                        doc.language);
}

}  // namespace lifg
