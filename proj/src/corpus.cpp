#include "suggestkit/corpus.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <string_view>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "jsonl.hpp"
#include "suggestkit/error.hpp"

namespace suggestkit {

using nlohmann::json;

namespace {

std::string where(std::string_view kind, const std::string& id) {
    return std::string(kind) + " '" + id + "'";
}

void validate_document(const Document& d) {
    if (detail::trim(d.id).empty()) throw Error(ErrorCode::InvalidInput, "document with empty id");
    if (detail::trim(d.headline).empty())
        throw Error(ErrorCode::InvalidInput, where("document", d.id) + ": empty headline");
    if (detail::trim(d.body).empty())
        throw Error(ErrorCode::InvalidInput, where("document", d.id) + ": empty body");
}

void validate_example(const QASExample& e) {
    if (detail::trim(e.id).empty()) throw Error(ErrorCode::InvalidInput, "example with empty id");
    if (detail::trim(e.query).empty())
        throw Error(ErrorCode::InvalidInput, where("example", e.id) + ": empty query");
    if (detail::trim(e.answer).empty())
        throw Error(ErrorCode::InvalidInput, where("example", e.id) + ": empty answer");
    if (e.suggestions.empty())
        throw Error(ErrorCode::InvalidInput, where("example", e.id) + ": no suggestions");
    if (e.suggestions.size() > kMaxSuggestionsPerExample)
        throw Error(ErrorCode::InvalidInput, where("example", e.id) + ": more than 3 suggestions");
    for (const auto& s : e.suggestions) {
        if (detail::trim(s).empty())
            throw Error(ErrorCode::InvalidInput, where("example", e.id) + ": empty suggestion");
    }
}

template <typename T>
void check_unique(const std::vector<T>& items, std::string_view kind) {
    std::unordered_set<std::string> seen;
    for (const auto& item : items) {
        if (!seen.insert(item.id).second) {
            throw Error(ErrorCode::DuplicateId,
                        "duplicate " + std::string(kind) + " id \"" + item.id + "\"");
        }
    }
}

}  // namespace

void validate(const Corpus& corpus) {
    for (const auto& d : corpus.documents) validate_document(d);
    for (const auto& e : corpus.examples) validate_example(e);
    check_unique(corpus.documents, "document");
    check_unique(corpus.examples, "example");
}

std::vector<Document> parse_documents(std::string_view text, std::string_view source) {
    std::vector<Document> docs;
    std::unordered_set<std::string> seen;
    detail::for_each_record(text, source, [&](const json& j, std::size_t line) {
        const std::string at = std::string(source) + " line " + std::to_string(line);
        Document d;
        d.id = detail::required_string(j, "id", at);
        d.headline = detail::required_string(j, "headline", at);
        d.body = detail::required_string(j, "body", at);
        if (auto it = j.find("tags"); it != j.end() && !it->is_null()) {
            d.tags = it->get<std::vector<std::string>>();
        }
        if (!seen.insert(d.id).second) {
            throw Error(ErrorCode::DuplicateId, at + ": duplicate document id \"" + d.id + "\"");
        }
        docs.push_back(std::move(d));
    });
    return docs;
}

std::vector<QASExample> parse_examples(std::string_view text, std::string_view source) {
    std::vector<QASExample> examples;
    std::unordered_set<std::string> seen;
    detail::for_each_record(text, source, [&](const json& j, std::size_t line) {
        const std::string at = std::string(source) + " line " + std::to_string(line);
        QASExample e;
        e.id = detail::required_string(j, "id", at);
        e.query = detail::required_string(j, "query", at);
        e.answer = detail::required_string(j, "answer", at);
        auto it = j.find("suggestions");
        if (it == j.end() || !it->is_array()) {
            throw Error(ErrorCode::InvalidInput, at + ": missing array field \"suggestions\"");
        }
        e.suggestions = it->get<std::vector<std::string>>();
        try {
            validate_example(e);
        } catch (const Error& err) {
            throw Error(err.code(), at + ": " + err.message());
        }
        if (!seen.insert(e.id).second) {
            throw Error(ErrorCode::DuplicateId, at + ": duplicate example id \"" + e.id + "\"");
        }
        examples.push_back(std::move(e));
    });
    return examples;
}

Corpus load_corpus(const std::filesystem::path& documents_path,
                   const std::filesystem::path& examples_path) {
    Corpus corpus;
    corpus.documents = parse_documents(detail::read_file(documents_path), documents_path.string());
    if (corpus.documents.empty()) {
        throw Error(ErrorCode::EmptyCorpus, "empty corpus: " + documents_path.string());
    }
    corpus.examples = parse_examples(detail::read_file(examples_path), examples_path.string());
    validate(corpus);
    return corpus;
}

std::string serialize_documents(const std::vector<Document>& documents) {
    std::string out;
    for (const auto& d : documents) {
        json j = {{"id", d.id}, {"headline", d.headline}, {"body", d.body}};
        if (!d.tags.empty()) j["tags"] = d.tags;
        out += detail::dump_line(j);
    }
    return out;
}

std::string serialize_examples(const std::vector<QASExample>& examples) {
    std::string out;
    for (const auto& e : examples) {
        json j = {{"id", e.id}, {"query", e.query}, {"answer", e.answer},
                  {"suggestions", e.suggestions}};
        out += detail::dump_line(j);
    }
    return out;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& documents_path,
                  const std::filesystem::path& examples_path) {
    detail::write_file(documents_path, serialize_documents(corpus.documents));
    detail::write_file(examples_path, serialize_examples(corpus.examples));
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
    write_corpus(corpus, dir / "documents.jsonl", dir / "examples.jsonl");
}

// ---------------------------------------------------------------------------
// Synthetic corpus

namespace {

struct Topic {
    std::string_view slug;
    std::string_view phrase;
    std::array<std::string_view, 4> facts;
    std::array<std::string_view, 3> questions;  // "{age}" is replaced with e.g. "4 months old"
};

constexpr std::array<Topic, 12> kTopics = {{
    {"naps", "nap schedules",
     {"Most babies this age do best with two to three naps spread across the day.",
      "A consistent first nap time anchors the rest of the schedule.",
      "Short naps of under forty minutes are common and usually improve with practice.",
      "A dark room and a short wind-down routine help naps last longer."},
     {"How many naps does a baby {age} need?", "How long should naps last for a baby {age}?",
      "When should the first nap start for a baby {age}?"}},
    {"regression", "sleep regressions",
     {"Regressions often coincide with new developmental skills such as rolling.",
      "Keeping the usual routine steady is the most reliable way through a regression.",
      "Extra night waking during a regression tends to pass within two to six weeks.",
      "Offering more daytime practice of new skills can reduce night disruptions."},
     {"How long does a sleep regression last for a baby {age}?",
      "What causes sleep regressions in a baby {age}?",
      "How can I help my baby {age} through a sleep regression?"}},
    {"wake-windows", "wake windows",
     {"A wake window is the stretch of awake time between two sleeps.",
      "Overtired babies often show yawning, eye rubbing and fussiness.",
      "Wake windows lengthen gradually as babies grow.",
      "Watching sleepy cues works better than following the clock alone."},
     {"What is a good wake window for a baby {age}?",
      "What are the signs that my baby {age} is overtired?",
      "How should wake windows change for a baby {age}?"}},
    {"night-feeds", "night feedings",
     {"Many babies still need one or more feeds overnight.",
      "Gradually shortening feeds is a gentle way to drop a night feed.",
      "A full feed before bedtime can lengthen the first stretch of sleep.",
      "Talk with your pediatrician before dropping night feeds."},
     {"How many night feeds does a baby {age} need?",
      "How can I drop a night feed for my baby {age}?",
      "Does a bedtime feed help a baby {age} sleep longer?"}},
    {"bedtime-routine", "a bedtime routine",
     {"A routine of bath, feed, book and song signals that sleep is coming.",
      "Keeping the routine to about twenty minutes prevents overtiredness.",
      "Doing the same steps in the same order every night builds sleep associations.",
      "Dim lights during the routine support melatonin release."},
     {"What should a bedtime routine include for a baby {age}?",
      "How long should the bedtime routine be for a baby {age}?",
      "What time should bedtime be for a baby {age}?"}},
    {"swaddling", "swaddling",
     {"Swaddling can calm the startle reflex in young babies.",
      "Stop swaddling as soon as your baby shows signs of rolling.",
      "Arms-out sleep sacks are a common next step after the swaddle.",
      "A swaddle should be snug around the arms but loose at the hips."},
     {"Should I still swaddle my baby {age}?",
      "How do I transition my baby {age} out of the swaddle?",
      "Is a sleep sack safe for a baby {age}?"}},
    {"self-soothing", "self-soothing",
     {"Putting your baby down drowsy but awake gives practice falling asleep.",
      "Pausing a moment before responding lets babies try to settle themselves.",
      "Thumb sucking and hand sucking are normal self-soothing behaviors.",
      "Consistency matters more than the specific soothing method you choose."},
     {"How can I teach my baby {age} to self-soothe?",
      "Should I put my baby {age} down drowsy but awake?",
      "How long should I wait before soothing my baby {age}?"}},
    {"early-waking", "early morning waking",
     {"Waking before six in the morning is often linked to a late bedtime or overtiredness.",
      "Blackout curtains keep early light from waking a baby.",
      "Treating wakings before six as night wakings can reset the morning.",
      "An early first nap can reinforce early waking."},
     {"Why does my baby {age} wake up so early?",
      "Can blackout curtains help my baby {age} sleep later?",
      "Should I move bedtime later for my baby {age}?"}},
    {"crib", "the move to a crib",
     {"Introducing the crib for naps first can make the transition smoother.",
      "The crib should have a firm mattress and no loose bedding.",
      "Familiar routines help babies accept a new sleep space.",
      "Room sharing without bed sharing is recommended for the first months."},
     {"When should my baby {age} move to a crib?",
      "How do I help my baby {age} sleep in a crib?",
      "Is it safe for my baby {age} to have a blanket in the crib?"}},
    {"white-noise", "white noise",
     {"Continuous white noise can mask household sounds.",
      "Keep the machine away from the crib and at a moderate volume.",
      "White noise can become part of the sleep routine.",
      "Many families phase white noise out gradually later on."},
     {"Is white noise safe for a baby {age}?",
      "How loud should white noise be for a baby {age}?",
      "Should white noise play all night for a baby {age}?"}},
    {"teething", "teething and sleep",
     {"Teething discomfort can cause brief periods of disrupted sleep.",
      "A cold teething ring before bed can ease sore gums.",
      "Keeping the normal routine during teething avoids new sleep habits.",
      "Ask your pediatrician before giving any pain relief."},
     {"Can teething disrupt sleep for a baby {age}?",
      "How can I soothe a teething baby {age} at night?",
      "How long does teething affect sleep for a baby {age}?"}},
    {"daylight-saving", "clock changes",
     {"Shifting the schedule by fifteen minutes a day eases clock changes.",
      "Morning light exposure helps reset the body clock.",
      "Most babies adjust to a clock change within a week.",
      "Meals and naps should shift along with bedtime."},
     {"How do I adjust my baby {age} to a clock change?",
      "How long does it take a baby {age} to adjust to a new schedule?",
      "Should I shift naps for my baby {age} after a clock change?"}},
}};

constexpr std::array<std::string_view, 6> kHeadlineTemplates = {
    "{Topic} when your baby is {age}",
    "How to handle {topic} at {age}",
    "Tips on {topic} for babies {age}",
    "What to expect from {topic} at {age}",
    "Is it normal to struggle with {topic} at {age}",
    "A parent's guide to {topic} for babies {age}",
};

constexpr std::array<std::string_view, 5> kClosers = {
    "Every baby is different, so adjust to the cues you see.",
    "Small, consistent changes usually work better than big ones.",
    "Keeping a short sleep log can help you spot patterns.",
    "If sleep problems persist, check in with your pediatrician.",
    "Remember that progress is rarely a straight line.",
};

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
    return s;
}

std::string capitalize(std::string_view s) {
    std::string out(s);
    if (!out.empty() && out[0] >= 'a' && out[0] <= 'z') out[0] = static_cast<char>(out[0] - 32);
    return out;
}

std::string padded_id(std::string_view prefix, std::size_t n, std::size_t width) {
    std::string digits = std::to_string(n);
    if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
    return std::string(prefix) + digits;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    // Portable: avoids implementation-defined distributions.
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

private:
    std::mt19937_64 engine_;
};

}  // namespace

Corpus synth_corpus(std::uint64_t seed, std::size_t n_docs, std::size_t n_examples) {
    if (n_examples > n_docs) {
        throw Error(ErrorCode::InvalidInput, "n_examples (" + std::to_string(n_examples) +
                                                 ") exceeds n_docs (" + std::to_string(n_docs) + ")");
    }
    Rng rng(seed);
    const std::size_t width = std::max<std::size_t>(4, std::to_string(n_docs).size());

    Corpus corpus;
    corpus.documents.reserve(n_docs);
    std::vector<std::size_t> doc_topic;
    std::vector<std::string> doc_age;
    std::unordered_set<std::string> headlines;

    for (std::size_t i = 0; i < n_docs; ++i) {
        std::size_t topic_idx = 0;
        std::string age;
        std::string headline;
        for (int attempt = 0;; ++attempt) {
            topic_idx = rng.below(kTopics.size());
            const bool weeks = rng.below(2) == 0;
            const std::size_t n = weeks ? 2 + rng.below(15) : 2 + rng.below(17);
            age = std::to_string(n) + (weeks ? " weeks old" : " months old");
            const auto& tmpl = kHeadlineTemplates[rng.below(kHeadlineTemplates.size())];
            const Topic& topic = kTopics[topic_idx];
            headline = replace_all(std::string(tmpl), "{Topic}", capitalize(topic.phrase));
            headline = replace_all(headline, "{topic}", topic.phrase);
            headline = replace_all(headline, "{age}", age);
            if (attempt >= 64) headline += " (part " + std::to_string(i + 1) + ")";
            if (headlines.insert(headline).second) break;
        }
        const Topic& topic = kTopics[topic_idx];

        std::array<std::size_t, 4> order = {0, 1, 2, 3};
        for (std::size_t k = order.size() - 1; k > 0; --k) std::swap(order[k], order[rng.below(k + 1)]);
        const std::size_t n_facts = 2 + rng.below(3);
        std::string body = "At " + age + ", " + std::string(topic.phrase) + " can feel confusing.";
        for (std::size_t k = 0; k < n_facts; ++k) body += " " + std::string(topic.facts[order[k]]);
        body += " " + std::string(kClosers[rng.below(kClosers.size())]);

        Document d;
        d.id = padded_id("d", i + 1, width);
        d.headline = std::move(headline);
        d.body = std::move(body);
        d.tags = {std::string(topic.slug), age.find("week") != std::string::npos ? "weeks" : "months"};
        corpus.documents.push_back(std::move(d));
        doc_topic.push_back(topic_idx);
        doc_age.push_back(age);
    }

    // Partial Fisher-Yates picks distinct documents to annotate.
    std::vector<std::size_t> pick(n_docs);
    for (std::size_t i = 0; i < n_docs; ++i) pick[i] = i;
    for (std::size_t i = 0; i < n_examples; ++i) {
        std::swap(pick[i], pick[i + rng.below(n_docs - i)]);
    }
    pick.resize(n_examples);
    std::sort(pick.begin(), pick.end());

    const std::size_t ex_width = std::max<std::size_t>(3, std::to_string(n_examples).size());
    for (std::size_t i = 0; i < pick.size(); ++i) {
        const Document& d = corpus.documents[pick[i]];
        const Topic& topic = kTopics[doc_topic[pick[i]]];
        QASExample e;
        e.id = padded_id("ex", i + 1, ex_width);
        e.query = d.headline;
        e.answer = d.body;
        for (auto q : topic.questions) e.suggestions.push_back(replace_all(std::string(q), "{age}", doc_age[pick[i]]));
        corpus.examples.push_back(std::move(e));
    }
    return corpus;
}

CorpusStats corpus_stats(const Corpus& corpus) {
    CorpusStats s;
    s.documents = corpus.documents.size();
    s.examples = corpus.examples.size();
    std::size_t body_total = 0, headline_total = 0;
    for (const auto& d : corpus.documents) {
        body_total += d.body.size();
        headline_total += d.headline.size();
    }
    for (const auto& e : corpus.examples) s.suggestions += e.suggestions.size();
    if (s.documents > 0) {
        s.mean_body_length = static_cast<double>(body_total) / static_cast<double>(s.documents);
        s.mean_headline_length = static_cast<double>(headline_total) / static_cast<double>(s.documents);
    }
    return s;
}

}  // namespace suggestkit
