#include "coldqs/synthetic.hpp"

#include <array>
#include <random>

#include "coldqs/canonical.hpp"
#include "coldqs/partition.hpp"
#include "coldqs/prompt.hpp"

namespace coldqs::synthetic {

namespace {

constexpr std::array kProducts{"wireless earbuds", "running shoes", "rice cooker",  "yoga mat",
                               "phone case",       "desk lamp",     "coffee grinder", "backpack",
                               "air purifier",     "sunscreen",     "mechanical keyboard", "water bottle"};

constexpr std::array kProfiles{"",
                               "female, 25-30, frequently buys cosmetics",
                               "male, 30-35, interested in electronics",
                               "student, price sensitive",
                               "parent of two, buys household goods"};

struct QueryShape {
    Intent intent;
    const char* query;
    const char* reply;
};

constexpr std::array kShapes{
    QueryShape{Intent::product_recommendation, "Can you recommend a good {}?",
               "Here are three {} options with strong reviews."},
    QueryShape{Intent::product_recommendation, "I need a {} under 50 dollars",
               "These budget {} models are popular right now."},
    QueryShape{Intent::product_qa, "Is this {} waterproof?", "The listing says it resists splashes."},
    QueryShape{Intent::product_qa, "How long does the {} battery last?", "About eight hours per charge."},
    QueryShape{Intent::platform_qa, "How do I return a {} I bought last week?",
               "Open the order page and choose return."},
    QueryShape{Intent::small_talk, "I am bored, tell me something about {}",
               "Fun fact: the first {} was sold decades ago."},
};

std::string fill(std::string_view pattern, std::string_view topic) {
    std::string out(pattern);
    if (auto pos = out.find("{}"); pos != std::string::npos) out.replace(pos, 2, topic);
    return out;
}

DialogueContext make_context(const std::string& id, std::mt19937_64& rng, ClickLabel label,
                             std::string* topic = nullptr) {
    DialogueContext c;
    c.record_id = id;
    c.user_profile = kProfiles[bounded_draw(rng, kProfiles.size())];
    const auto& shape = kShapes[bounded_draw(rng, kShapes.size())];
    const std::string product = kProducts[bounded_draw(rng, kProducts.size())];
    const auto turns = bounded_draw(rng, 3);
    for (std::uint64_t t = 0; t < turns; ++t) {
        const std::string prev = kProducts[bounded_draw(rng, kProducts.size())];
        c.history.push_back({Speaker::user, "I was looking at a " + prev + " earlier"});
        c.history.push_back({Speaker::assistant, "The " + prev + " is in stock in several colors."});
    }
    c.current_query = fill(shape.query, product);
    c.intent = shape.intent;
    if (topic) *topic = product;
    c.click_label = label;
    return c;
}

std::vector<std::string> reference_options(const std::string& product, int k) {
    const std::array patterns{"What colors does the {} come in?", "Which {} has the longest warranty?",
                              "Is there a {} bundle with free shipping?", "How heavy is the {}?",
                              "Which {} do reviewers rate highest?", "Does the {} ship internationally?"};
    std::vector<std::string> out;
    for (int i = 0; i < k; ++i) out.push_back(fill(patterns[static_cast<std::size_t>(i) % patterns.size()], product));
    return out;
}

}  // namespace

Dataset make_dataset(const DatasetShape& shape) {
    std::mt19937_64 rng(shape.seed);
    Dataset d;
    d.click.name = PartitionName::click;
    d.unclick.name = PartitionName::unclick;
    d.test.name = PartitionName::test;

    for (std::size_t i = 0; i < shape.click; ++i) {
        PartitionRecord r;
        std::string product;
        r.context = make_context("c" + std::to_string(i), rng, ClickLabel::clicked, &product);
        r.context.clicked_index = static_cast<int>(bounded_draw(rng, static_cast<std::uint64_t>(shape.k)));
        SuggestionSet s;
        s.context_ref = r.id();
        s.k = shape.k;
        s.candidates = reference_options(product, shape.k);
        s.format_ok = true;
        s.raw_output = prompt::serialize_options(s.candidates);
        r.suggestions = std::move(s);
        d.click.records.push_back(std::move(r));
    }
    for (std::size_t i = 0; i < shape.unclick; ++i) {
        PartitionRecord r;
        r.context = make_context("u" + std::to_string(i), rng, ClickLabel::unclicked);
        d.unclick.records.push_back(std::move(r));
    }
    for (std::size_t i = 0; i < shape.test; ++i) {
        PartitionRecord r;
        r.context = make_context("t" + std::to_string(i), rng, ClickLabel::unlabeled);
        d.test.records.push_back(std::move(r));
    }
    for (std::size_t i = 0; i < shape.general; ++i) {
        const std::string topic = kProducts[bounded_draw(rng, kProducts.size())];
        d.general.push_back({"g" + std::to_string(i), "general", std::nullopt,
                             "Write one sentence about a " + topic + ".",
                             "A " + topic + " is a common everyday purchase."});
    }
    return d;
}

std::filesystem::path write_dataset(const std::filesystem::path& dir, const Dataset& data) {
    std::filesystem::create_directories(dir);
    save_partition(dir / "click.jsonl", data.click);
    save_partition(dir / "unclick.jsonl", data.unclick);
    save_partition(dir / "test.jsonl", data.test);
    std::vector<json> rows;
    for (const auto& p : data.general) rows.push_back(p);
    write_jsonl(dir / "general.jsonl", rows);

    json cfg{{"seed", 42},
             {"work_dir", "run"},
             {"backend", "mock"},
             {"data",
              {{"click", "click.jsonl"},
               {"unclick", "unclick.jsonl"},
               {"test", "test.jsonl"},
               {"general_corpus", "general.jsonl"}}},
             {"orchestrator", {{"iterations", 3}, {"rollouts_per_context", 4}, {"trainer_hook", json::array()}}}};
    const auto path = dir / "config.json";
    write_file_atomic(path, cfg.dump(2) + "\n");
    return path;
}

std::vector<engagement::InteractionEvent> make_events(const EventShape& shape) {
    std::mt19937_64 rng(shape.seed);
    std::vector<engagement::InteractionEvent> out;
    auto emit = [&](engagement::Arm arm, std::size_t users, double rate, const char* prefix) {
        std::poisson_distribution<int> count(rate);
        for (std::size_t u = 0; u < users; ++u) {
            // At least one event so every user counts toward UV.
            const int n = 1 + count(rng);
            for (int e = 0; e < n; ++e) {
                engagement::InteractionEvent ev;
                ev.user_id = prefix + std::to_string(u);
                ev.timestamp = shape.start + static_cast<std::int64_t>(
                                                 bounded_draw(rng, static_cast<std::uint64_t>(shape.span_seconds)));
                ev.event_kind = static_cast<engagement::EventKind>(bounded_draw(rng, 3));
                ev.experiment_arm = arm;
                out.push_back(std::move(ev));
            }
        }
    };
    emit(engagement::Arm::treatment, shape.treatment_users, shape.treatment_rate, "t");
    emit(engagement::Arm::control, shape.control_users, shape.control_rate, "c");
    return out;
}

}  // namespace coldqs::synthetic
