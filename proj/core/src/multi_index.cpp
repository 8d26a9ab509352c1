#include "misciga/multi_index.hpp"

#include "misciga/errors.hpp"

#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace misciga {

MultiIndex ones(int size) { return MultiIndex(size, 1); }

MultiIndex unit_step(const MultiIndex& i, int direction, int delta) {
    MultiIndex out = i;
    out[direction] += delta;
    return out;
}

int component_sum(const MultiIndex& i) {
    return std::accumulate(i.begin(), i.end(), 0);
}

bool is_downward_closed(const std::set<MultiIndex>& members) {
    for (const auto& i : members) {
        for (std::size_t k = 0; k < i.size(); ++k) {
            if (i[k] > 1) {
                MultiIndex back = i;
                --back[k];
                if (!members.count(back)) return false;
            }
        }
    }
    return true;
}

IndexSet::IndexSet(std::set<MultiIndex> members) : members_(std::move(members)) {
    for (const auto& i : members_) {
        if (i.size() != members_.begin()->size())
            throw StructureError("index set: mixed multi-index lengths");
        for (int c : i)
            if (c < 1) throw StructureError("index set: components must be >= 1");
    }
    if (!is_downward_closed(members_))
        throw StructureError("index set: not downward closed");
}

IndexSet IndexSet::single(const MultiIndex& root) {
    return IndexSet(std::set<MultiIndex>{root});
}

void IndexSet::insert(const MultiIndex& i) {
    if (!members_.empty() && i.size() != members_.begin()->size())
        throw StructureError("index set: mixed multi-index lengths");
    for (std::size_t k = 0; k < i.size(); ++k) {
        if (i[k] < 1) throw StructureError("index set: components must be >= 1");
        if (i[k] > 1 && !members_.count(unit_step(i, static_cast<int>(k), -1)))
            throw StructureError("index set: inserting " + to_string(i) +
                                 " would break downward closure");
    }
    members_.insert(i);
}

std::set<MultiIndex> margin(const IndexSet& lambda) {
    std::set<MultiIndex> out;
    for (const auto& j : lambda) {
        for (std::size_t k = 0; k < j.size(); ++k) {
            MultiIndex i = unit_step(j, static_cast<int>(k), +1);
            if (!lambda.contains(i)) out.insert(std::move(i));
        }
    }
    return out;
}

std::set<MultiIndex> reduced_margin(const IndexSet& lambda) {
    std::set<MultiIndex> out;
    for (const auto& i : margin(lambda)) {
        bool all_back_inside = true;
        for (std::size_t k = 0; k < i.size() && all_back_inside; ++k) {
            if (i[k] > 1 && !lambda.contains(unit_step(i, static_cast<int>(k), -1)))
                all_back_inside = false;
        }
        if (all_back_inside) out.insert(i);
    }
    return out;
}

void write_index_set(std::ostream& os, const IndexSet& lambda) {
    for (const auto& i : lambda) os << to_string(i) << '\n';
}

IndexSet read_index_set(std::istream& is) {
    std::set<MultiIndex> members;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        MultiIndex i;
        int c;
        while (ls >> c) i.push_back(c);
        if (!i.empty()) members.insert(std::move(i));
    }
    return IndexSet(std::move(members));
}

std::string to_string(const MultiIndex& i) {
    std::string s;
    for (std::size_t k = 0; k < i.size(); ++k) {
        if (k) s += ' ';
        s += std::to_string(i[k]);
    }
    return s;
}

}  // namespace misciga
