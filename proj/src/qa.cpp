#include "vrn/qa.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "vrn/datagen.hpp"

namespace vrn {

std::uint32_t question_type_hops(std::uint32_t type_id) {
    return datagen::question_type(type_id).hops;
}

void write_qa_file(const std::vector<QAItem>& items, const KnowledgeGraph& g,
                   std::ostream& qa_out, std::ostream& types_out) {
    for (const QAItem& item : items) {
        if (item.topic && item.span_begin >= 0) {
            for (std::size_t t = 0; t < item.tokens.size(); ++t) {
                if (t) qa_out << ' ';
                if (static_cast<std::int32_t>(t) == item.span_begin) qa_out << '[';
                qa_out << item.tokens[t];
                if (static_cast<std::int32_t>(t) + 1 == item.span_begin + item.span_len)
                    qa_out << ']';
            }
        } else {
            qa_out << item.text;
        }
        qa_out << '\t';
        for (std::size_t i = 0; i < item.answers.size(); ++i) {
            if (i) qa_out << '|';
            qa_out << g.entity(item.answers[i]).name;
        }
        qa_out << '\n';
        types_out << item.type_id << '\n';
    }
}

std::vector<QAItem> read_qa_file(std::istream& qa_in, std::istream* types_in,
                                 const KnowledgeGraph& g, std::uint32_t default_hop) {
    std::vector<QAItem> items;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(qa_in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw Error("malformed qa line " + std::to_string(line_no));
        std::string text = line.substr(0, tab);
        std::string answer_field = line.substr(tab + 1);

        QAItem item;
        std::size_t open = text.find('[');
        if (open != std::string::npos) {
            std::size_t close = text.find(']', open);
            if (close == std::string::npos)
                throw Error("unterminated bracket at line " + std::to_string(line_no));
            std::string topic_name = text.substr(open + 1, close - open - 1);
            auto topic = g.find_entity(topic_name);
            if (!topic)
                throw Error("unknown topic entity '" + topic_name + "' at line " +
                            std::to_string(line_no));
            item.topic = *topic;
            item.span_begin =
                static_cast<std::int32_t>(tokenize(text.substr(0, open)).size());
            item.span_len = static_cast<std::int32_t>(tokenize(topic_name).size());
        }
        item.tokens = tokenize(text);  // brackets fall out as punctuation
        item.text = join_tokens(item.tokens);

        std::stringstream answers(answer_field);
        std::string name;
        while (std::getline(answers, name, '|')) {
            if (name.empty()) continue;
            auto id = g.find_entity(name);
            if (!id)
                throw Error("unknown answer entity '" + name + "' at line " +
                            std::to_string(line_no));
            item.answers.push_back(*id);
        }
        if (item.answers.empty())
            throw Error("empty answer set at line " + std::to_string(line_no));
        std::sort(item.answers.begin(), item.answers.end());
        item.answers.erase(std::unique(item.answers.begin(), item.answers.end()),
                           item.answers.end());
        item.hop = default_hop;
        items.push_back(std::move(item));
    }
    if (types_in != nullptr) {
        std::size_t idx = 0;
        std::string type_line;
        while (std::getline(*types_in, type_line) && idx < items.size()) {
            if (!type_line.empty() && type_line.back() == '\r') type_line.pop_back();
            if (type_line.empty()) continue;
            items[idx].type_id = static_cast<std::uint32_t>(std::stoul(type_line));
            items[idx].hop = question_type_hops(items[idx].type_id);
            ++idx;
        }
        if (idx != items.size())
            throw Error("type sidecar shorter than qa file");
    }
    return items;
}

}  // namespace vrn
