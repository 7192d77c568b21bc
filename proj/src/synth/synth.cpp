// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include "ragdx/synth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "ragdx/core/distribution.hpp"
#include "ragdx/core/payload.hpp"
#include "ragdx/core/rng.hpp"
#include "ragdx/index/index_io.hpp"

namespace ragdx {

void SynthSpec::validate() const {
  if (classes < 1 || dimension < 1 || records_per_class < 1 || queries_per_class < 1) {
    fail(Errc::ConfigInvalid, "synth counts must be at least 1");
  }
  auto fraction = [](double f) { return f >= 0.0 && f <= 1.0; };
  if (!fraction(informative_fraction) || !fraction(distractor_fraction) ||
      informative_fraction + distractor_fraction > 1.0) {
    fail(Errc::ConfigInvalid, "record fractions must lie in [0, 1] and sum to at most 1");
  }
  if (!fraction(text_correlation)) fail(Errc::ConfigInvalid, "text correlation must be in [0, 1]");
  if (!(sigma_between >= 0.0) || !(sigma_within >= 0.0) || !std::isfinite(sigma_between) ||
      !std::isfinite(sigma_within) || !std::isfinite(background_pull)) {
    fail(Errc::ConfigInvalid, "cluster scales must be finite and non-negative");
  }
}

void to_json(json& j, const SynthSpec& s) {
  j = json{{"classes", s.classes},
           {"dimension", s.dimension},
           {"records_per_class", s.records_per_class},
           {"queries_per_class", s.queries_per_class},
           {"train_queries_per_class", s.train_queries_per_class},
           {"sigma_between", s.sigma_between},
           {"sigma_within", s.sigma_within},
           {"informative_fraction", s.informative_fraction},
           {"distractor_fraction", s.distractor_fraction},
           {"text_correlation", s.text_correlation},
           {"background_pull", s.background_pull},
           {"seed", s.seed}};
}

void from_json(const json& j, SynthSpec& s) {
  const SynthSpec d;
  s.classes = j.value("classes", d.classes);
  s.dimension = j.value("dimension", d.dimension);
  s.records_per_class = j.value("records_per_class", d.records_per_class);
  s.queries_per_class = j.value("queries_per_class", d.queries_per_class);
  s.train_queries_per_class = j.value("train_queries_per_class", d.train_queries_per_class);
  s.sigma_between = j.value("sigma_between", d.sigma_between);
  s.sigma_within = j.value("sigma_within", d.sigma_within);
  s.informative_fraction = j.value("informative_fraction", d.informative_fraction);
  s.distractor_fraction = j.value("distractor_fraction", d.distractor_fraction);
  s.text_correlation = j.value("text_correlation", d.text_correlation);
  s.background_pull = j.value("background_pull", d.background_pull);
  s.seed = j.value("seed", d.seed);
}

std::string_view to_string(RecordKind k) noexcept {
  switch (k) {
    case RecordKind::informative: return "informative";
    case RecordKind::distractor: return "distractor";
    case RecordKind::background: return "background";
  }
  return "background";
}

RecordKind parse_record_kind(std::string_view s) {
  if (s == "informative") return RecordKind::informative;
  if (s == "distractor") return RecordKind::distractor;
  if (s == "background") return RecordKind::background;
  fail(Errc::ParseError, "unknown record kind '" + std::string(s) + "'");
}

std::string class_label(std::size_t c) { return "c" + std::to_string(c); }

ClassVocab synth_vocab(std::size_t classes) {
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < classes; ++c) labels.push_back(class_label(c));
  return ClassVocab(std::move(labels));
}

namespace {

constexpr std::string_view kNoCluster = "none";

using Vec = Eigen::VectorXd;

Vec gaussian(SplitMix64& rng, std::size_t d, double scale) {
  Vec v(static_cast<Eigen::Index>(d));
  const double s = scale / std::sqrt(double(d));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = s * rng.normal();
  return v;
}

Embedding to_embedding(const Vec& v) {
  std::vector<float> f(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) f[static_cast<std::size_t>(i)] = static_cast<float>(v[i]);
  return Embedding(std::move(f));
}

std::string record_payload(RecordId id, const std::string& label, std::string_view cluster,
                           RecordKind kind) {
  return "synth:record/" + std::to_string(raw(id)) + "?label=" + label +
         "&cluster=" + std::string(cluster) + "&kind=" + std::string(to_string(kind)) +
         "&caption=" + label + "+" + std::string(to_string(kind));
}

std::vector<Query> make_queries(const SynthSpec& spec, const std::vector<Vec>& centers,
                                std::size_t per_class, std::string_view prefix,
                                std::string_view stream) {
  SplitMix64 rng(derive_seed(spec.seed, fnv1a64(stream)));
  const ClassVocab vocab = synth_vocab(spec.classes);
  std::vector<Query> out;
  const std::size_t n = per_class * spec.classes;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t g = i % spec.classes;
    char id[32];
    std::snprintf(id, sizeof id, "%s%04zu", std::string(prefix).c_str(), i);
    Query q;
    q.id = id;
    q.image = to_embedding(centers[g] + gaussian(rng, spec.dimension, spec.sigma_within));
    q.question = "which class does this image show?";
    q.gold_answer = class_label(g);
    q.vocab = vocab;
    q.task = TaskKind::classification;
    q.payload_ref = "synth:query/" + q.id + "?label=" + q.gold_answer + "&cluster=" + q.gold_answer;
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace

SynthCorpus generate(const SynthSpec& spec) {
  spec.validate();
  const std::size_t d = spec.dimension;
  const std::size_t C = spec.classes;
  SplitMix64 geometry(derive_seed(spec.seed, fnv1a64("geometry")));
  std::vector<Vec> centers, topics;
  for (std::size_t c = 0; c < C; ++c) centers.push_back(gaussian(geometry, d, spec.sigma_between));
  for (std::size_t c = 0; c < C; ++c) topics.push_back(gaussian(geometry, d, 1.0));
  const Vec generic = gaussian(geometry, d, 1.0);

  const double rho = spec.text_correlation;
  const double rest = std::sqrt(1.0 - rho * rho);
  const std::size_t R = spec.records_per_class;
  const auto n_inf = static_cast<std::size_t>(std::lround(spec.informative_fraction * double(R)));
  const auto n_dis = std::min(
      R - n_inf, static_cast<std::size_t>(std::lround(spec.distractor_fraction * double(R))));

  SynthCorpus out;
  out.index = Index(d, DType::f32);
  SplitMix64 rng(derive_seed(spec.seed, fnv1a64("records")));
  std::uint64_t next_id = 1;
  for (std::size_t c = 0; c < C; ++c) {
    const std::string label = class_label(c);
    for (std::size_t i = 0; i < R; ++i) {
      const RecordKind kind = i < n_inf             ? RecordKind::informative
                              : i < n_inf + n_dis ? RecordKind::distractor
                                                  : RecordKind::background;
      std::size_t cluster = c;
      if (kind == RecordKind::distractor && C > 1) cluster = (c + 1 + (i - n_inf) % (C - 1)) % C;
      Vec image = kind == RecordKind::informative ? centers[cluster]
                                                  : Vec(spec.background_pull * centers[cluster]);
      image += gaussian(rng, d, spec.sigma_within);
      const Vec& topic = kind == RecordKind::background ? generic : topics[c];
      const Vec text = rho * image + rest * (topic + gaussian(rng, d, spec.sigma_within));

      const RecordId id{next_id++};
      const std::string cluster_name =
          kind == RecordKind::background ? std::string(kNoCluster) : class_label(cluster);
      out.index.add({id, to_embedding(image), to_embedding(text),
                     record_payload(id, label, cluster_name, kind), "synth"});
      out.tags.emplace(id, kind);
    }
  }
  out.queries = make_queries(spec, centers, spec.queries_per_class, "q", "queries");
  out.train_queries = make_queries(spec, centers, spec.train_queries_per_class, "t", "train");
  return out;
}

RecordKind record_kind(const IndexRecord& record) {
  return parse_record_kind(payload_param(record.payload_ref, "kind").value_or("background"));
}

std::string record_label(const IndexRecord& record) {
  auto label = payload_param(record.payload_ref, "label");
  if (!label) fail(Errc::InvalidArgument, "record " + std::to_string(raw(record.id)) + " has no label");
  return *label;
}

std::string record_cluster(const IndexRecord& record) {
  return payload_param(record.payload_ref, "cluster").value_or(record_label(record));
}

namespace {

std::vector<RecordId> top_ids(const Index& index, const Query& q, const HeadPair& heads,
                              std::size_t k, MergePolicy merge) {
  auto cands = dual_retrieve(q.image, index, heads, k, merge);
  std::vector<RecordId> ids;
  for (std::size_t i = 0; i < std::min(k, cands.items.size()); ++i) ids.push_back(cands.items[i].id);
  return ids;
}

std::set<std::string> labels_of(const Index& index, const std::vector<RecordId>& ids) {
  std::set<std::string> out;
  for (RecordId id : ids) out.insert(record_label(index.get(id)));
  return out;
}

std::set<std::size_t> reader_labels(const Index& index, const Query& q,
                                    const std::vector<RecordId>& ids, const Reader& reader) {
  std::set<std::size_t> out;
  for (RecordId id : ids) out.insert(argmax(reader.score_candidate(q, index.get(id))));
  return out;
}

std::size_t count_mixed(const Index& index, std::span<const Query> queries, const HeadPair& heads,
                        std::size_t k, MergePolicy merge, std::vector<bool>* mixed,
                        const Reader* reader = nullptr) {
  std::size_t n = 0;
  if (mixed) mixed->assign(queries.size(), false);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto ids = top_ids(index, queries[i], heads, k, merge);
    const bool m = reader ? reader_labels(index, queries[i], ids, *reader).size() >= 2
                          : labels_of(index, ids).size() >= 2;
    n += m;
    if (mixed) (*mixed)[i] = m;
  }
  return n;
}

}  // namespace

double mixed_label_rate(const Index& index, std::span<const Query> queries, const HeadPair& heads,
                        std::size_t k, MergePolicy merge) {
  if (queries.empty()) fail(Errc::EmptyEvalSet, "no queries");
  return double(count_mixed(index, queries, heads, k, merge, nullptr)) / double(queries.size());
}

InjectionResult inject_inconsistency(const Index& index, std::span<const Query> queries,
                                     double rate, const InjectOptions& options) {
  if (!(rate >= 0.0 && rate <= 1.0)) fail(Errc::InvalidArgument, "injection rate must be in [0, 1]");
  InjectionResult out{index, {}, {}};
  if (rate == 0.0) return out;
  if (queries.empty()) fail(Errc::InfeasibleRate, "no queries to inject for");
  if (options.k < 2 || index.size() < options.k) {
    fail(Errc::InfeasibleRate, "index of " + std::to_string(index.size()) +
                                   " records cannot host a top-" + std::to_string(options.k) +
                                   " with two labels");
  }
  const ClassVocab& vocab = queries.front().vocab;
  if (vocab.size() < 2) fail(Errc::InfeasibleRate, "a single-class vocabulary cannot be mixed");

  // Donor captions per label, taken from informative records.
  std::map<std::string, std::vector<const IndexRecord*>> donors;
  for (const auto& r : index.records()) {
    if (record_kind(r) == RecordKind::informative) donors[record_label(r)].push_back(&r);
  }

  const HeadPair heads = HeadPair::identity(index.dimension());
  const auto target = static_cast<std::size_t>(std::lround(rate * double(queries.size())));
  std::vector<bool> mixed;
  std::size_t have = count_mixed(out.index, queries, heads, options.k, options.merge, &mixed,
                            options.reader);

  std::vector<std::size_t> order(queries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  SplitMix64 rng(derive_seed(options.seed, fnv1a64("inject")));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  const std::size_t per_query = std::max<std::size_t>(1, options.k / 2);
  std::uint64_t next_id = out.index.empty() ? 1 : raw(out.index.max_id()) + 1;
  for (std::size_t qi : order) {
    if (have >= target) break;
    if (mixed[qi]) continue;
    const Query& q = queries[qi];
    const auto cands = dual_retrieve(q.image, out.index, heads, options.k, options.merge);
    const double top = cands.items.front().raw_score;
    const auto present = labels_of(out.index, top_ids(out.index, q, heads, options.k, options.merge));

    std::string wrong;
    const std::size_t start = fnv1a64(q.id) % vocab.size();
    for (std::size_t j = 0; j < vocab.size() && wrong.empty(); ++j) {
      const std::string& l = vocab.label((start + j) % vocab.size());
      if (l != q.gold_answer && !present.count(l)) wrong = l;
    }
    for (std::size_t j = 0; j < vocab.size() && wrong.empty(); ++j) {
      const std::string& l = vocab.label((start + j) % vocab.size());
      if (!present.count(l)) wrong = l;
    }
    const auto& pool = donors[wrong];

    const Vec qv = to_vector(q.image);
    const double qq = qv.squaredNorm();
    if (qq == 0.0) continue;
    const std::string cluster = payload_param(q.payload_ref, "cluster").value_or(q.gold_answer);
    for (std::size_t j = 0; j < per_query; ++j) {
      const RecordId id{next_id++};
      const Vec image = qv * ((top + options.margin * double(j + 1)) / qq);
      const Embedding text = pool.empty() ? to_embedding(image)
                                          : pool[(fnv1a64(q.id) + j) % pool.size()]->text;
      out.index.add({id, to_embedding(image), text,
                     record_payload(id, wrong, cluster, RecordKind::distractor) +
                         "&injected=" + q.id,
                     "synth-injected"});
      out.added.push_back(id);
    }
    out.affected_queries.push_back(q.id);
    have = count_mixed(out.index, queries, heads, options.k, options.merge, &mixed,
                            options.reader);
  }
  return out;
}

double informative_recall(const Index& index, std::span<const Query> queries,
                          const HeadPair& heads, std::size_t k, MergePolicy merge) {
  if (queries.empty()) fail(Errc::EmptyEvalSet, "no queries");
  std::map<std::string, std::size_t> relevant;
  for (const auto& r : index.records()) {
    if (record_kind(r) == RecordKind::informative) ++relevant[record_label(r)];
  }
  double sum = 0.0;
  for (const auto& q : queries) {
    const std::size_t rel = relevant[q.gold_answer];
    if (rel == 0) continue;
    std::size_t hits = 0;
    for (RecordId id : top_ids(index, q, heads, k, merge)) {
      const IndexRecord& r = index.get(id);
      hits += record_kind(r) == RecordKind::informative && record_label(r) == q.gold_answer;
    }
    sum += double(hits) / double(std::min(k, rel));
  }
  return sum / double(queries.size());
}

std::map<std::string, std::size_t> simulated_choices(std::span<const PredictionRecord> predictions,
                                                     const Index& index,
                                                     std::span<const Query> queries,
                                                     double accuracy, std::uint64_t seed) {
  std::map<std::string, const Query*> by_id;
  for (const auto& q : queries) by_id[q.id] = &q;
  std::map<std::string, std::size_t> out;
  for (const auto& p : predictions) {
    auto it = by_id.find(p.query_id);
    if (it == by_id.end()) fail(Errc::InvalidArgument, "no query for prediction " + p.query_id);
    const Query& q = *it->second;
    const std::string cluster = payload_param(q.payload_ref, "cluster").value_or(q.gold_answer);
    std::size_t choice = 0;
    if (!p.candidate_scores.empty()) {
      choice = static_cast<std::size_t>(
          std::max_element(p.candidate_scores.begin(), p.candidate_scores.end()) -
          p.candidate_scores.begin());
    }
    SplitMix64 rng(derive_seed(seed, fnv1a64("rerank:" + p.query_id)));
    if (rng.uniform() <= accuracy) {
      for (std::size_t i = 0; i < p.candidate_ids.size(); ++i) {
        const IndexRecord& r = index.get(p.candidate_ids[i]);
        if (record_kind(r) == RecordKind::informative && record_cluster(r) == cluster) {
          choice = i;
          break;
        }
      }
    }
    out[p.query_id] = choice;
  }
  return out;
}

void emit_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_corpus(corpus.index, dir / "corpus.tsv");
  write_queries(corpus.queries, dir / "queries.jsonl");
  write_queries(corpus.train_queries, dir / "train_queries.jsonl");
  std::ofstream tags(dir / "tags.jsonl", std::ios::trunc);
  if (!tags) fail(Errc::IoError, "cannot write " + (dir / "tags.jsonl").string());
  write_format_header(tags, "ragdx.synth-tags", 1);
  for (const auto& [id, kind] : corpus.tags) {
    tags << json{{"record_id", raw(id)}, {"kind", to_string(kind)}}.dump() << '\n';
  }
}

}  // namespace ragdx
