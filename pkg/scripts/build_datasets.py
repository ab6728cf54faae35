"""Regenerate the bundled synthetic task files under src/svlab/tasks/data.

The word lists below are hand-written; behavioral sets are sampled from a
small marker grammar with a fixed seed. Output is deterministic.
"""

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "svlab" / "tasks" / "data"

ANTONYMS = """
big small, hot cold, fast slow, happy sad, light dark, old young, rich poor,
hard soft, good bad, tall short, open closed, early late, full empty,
high low, strong weak, wet dry, clean dirty, loud quiet, thick thin,
wide narrow, deep shallow, sharp dull, sweet sour, brave timid, kind cruel,
true false, safe dangerous, easy difficult, cheap expensive, near far,
inside outside, above below, before after, first last, win lose, buy sell,
push pull, give take, come go, love hate, laugh cry, start finish,
enter exit, accept reject, increase decrease, arrive depart,
remember forget, ask answer, always never, day night, north south,
east west, left right, top bottom, front back, friend enemy, war peace,
hero villain, king queen, boy girl, man woman, husband wife,
brother sister, father mother, son daughter, success failure,
victory defeat, profit loss, sunrise sunset, summer winter,
positive negative, major minor, maximum minimum, rough smooth,
loose tight, polite impolite, visible invisible, possible impossible,
legal illegal, correct incorrect, known unknown, common rare,
modern ancient, public private, simple complex, asleep awake,
alive dead, present absent, inner outer, upper lower, import export,
include exclude, input output, more less, many few, most least,
all none, everything nothing, here there, yes no, on off, over under,
wild tame, raw cooked, fresh stale, bright dim, generous stingy,
proud humble, careful careless, lucky unlucky, patient impatient,
sunny cloudy, noisy silent, tidy messy, guilty innocent, optimist pessimist,
question reply, teacher student, buyer seller, sender receiver,
heaven hell, future past, often seldom, rise fall, float sink,
borrow lend, catch throw, create destroy, attack defend, wide slim
"""

SYNONYMS = """
big large, small tiny, fast quick, happy glad, sad unhappy, old elderly,
rich wealthy, hard tough, good fine, tall lofty, early premature,
strong powerful, wet damp, clean spotless, loud noisy, quiet calm,
thin slender, wide broad, sharp keen, brave bold, kind gentle, true real,
safe secure, easy effortless, cheap inexpensive, near close, start begin,
finish end, buy purchase, love adore, laugh giggle, answer response,
friend pal, enemy foe, victory triumph, profit gain, modern contemporary,
ancient antique, simple plain, complex complicated, common ordinary,
rare scarce, fresh new, bright shiny, generous charitable, proud arrogant,
careful cautious, tidy neat, messy untidy, guilty culpable, often frequently,
rise ascend, fall descend, create make, destroy ruin, attack assault,
defend protect, borrow take, catch grab, throw toss, pull drag, push shove,
give donate, come approach, go leave, win prevail, lose misplace,
accept receive, reject refuse, increase grow, decrease shrink,
arrive reach, depart exit, remember recall, forget overlook, ask inquire,
always forever, never nowise, day daytime, dark gloomy, light bright,
cold chilly, hot warm, slow sluggish, short brief, closed shut, empty vacant,
full packed, high lofty, low humble, weak feeble, dry arid, dirty filthy,
thick dense, deep profound, dull boring, sweet sugary, sour tart,
timid shy, cruel brutal, false untrue, dangerous risky, difficult tough,
expensive costly, far distant, first initial, last final, young youthful,
poor needy, soft gentle, late tardy, bad awful, hero champion,
villain rogue, king monarch, boy lad, girl lass, man gentleman,
woman lady, wife spouse, father dad, mother mom, success achievement,
failure flop, defeat loss, loss defeat, winter wintertime, rough coarse,
loose slack, tight snug, visible apparent, possible feasible,
legal lawful, illegal unlawful, correct right, incorrect wrong,
known familiar, unknown obscure, public communal, private personal,
asleep sleeping, awake alert, alive living, dead deceased, present here,
absent missing, wild untamed, tame docile, raw uncooked, stale old,
stingy miserly, humble modest, lucky fortunate, patient tolerant,
sunny bright, cloudy overcast, silent mute, innocent blameless,
teacher tutor, student pupil, future tomorrow, past history, sink submerge,
float drift, lend loan, beautiful pretty, smart clever, angry mad,
begin commence, end conclude, huge enormous, tiny minute, quick rapid
"""

CAPITALIZE_EXTRA = """
apple banana cherry grape lemon mango melon orange peach pear plum river
mountain valley forest desert ocean island bridge castle garden window
table chair house school market village city road street train plane
ship horse tiger lion eagle shark whale rabbit turtle snake spider
flower tree grass stone cloud storm rain snow wind fire water earth
music dance story song paper pencil book letter candle mirror clock
basket bottle bucket button carpet circle coffee cotton dinner doctor
engine farmer finger forest? silver golden copper marble pepper butter
cookie pizza salad soup bread cheese honey sugar salt tea milk juice
"""

# (country, capital); single-token names, hyphenated where the real name is.
COUNTRIES = """
France Paris, Germany Berlin, Italy Rome, Spain Madrid, Portugal Lisbon,
Japan Tokyo, China Beijing, Russia Moscow, Egypt Cairo, Kenya Nairobi,
Peru Lima, Chile Santiago, Cuba Havana, Canada Ottawa, Australia Canberra,
Austria Vienna, Belgium Brussels, Netherlands Amsterdam, Sweden Stockholm,
Norway Oslo, Finland Helsinki, Denmark Copenhagen, Poland Warsaw,
Greece Athens, Turkey Ankara, Iran Tehran, Iraq Baghdad, Syria Damascus,
Lebanon Beirut, Jordan Amman, Israel Jerusalem, Thailand Bangkok,
Vietnam Hanoi, Laos Vientiane, Myanmar Naypyidaw, Nepal Kathmandu,
Bangladesh Dhaka, Pakistan Islamabad, Afghanistan Kabul, Indonesia Jakarta,
Philippines Manila, Mongolia Ulaanbaatar, Taiwan Taipei, Ireland Dublin,
Iceland Reykjavik, Hungary Budapest, Romania Bucharest, Bulgaria Sofia,
Serbia Belgrade, Croatia Zagreb, Slovenia Ljubljana, Slovakia Bratislava,
Czechia Prague, Ukraine Kyiv, Belarus Minsk, Lithuania Vilnius, Latvia Riga,
Estonia Tallinn, Moldova Chisinau, Albania Tirana, Montenegro Podgorica,
Macedonia Skopje, Bosnia Sarajevo, Georgia Tbilisi, Armenia Yerevan,
Azerbaijan Baku, Kazakhstan Astana, Uzbekistan Tashkent,
Turkmenistan Ashgabat, Kyrgyzstan Bishkek, Tajikistan Dushanbe, Qatar Doha,
Bahrain Manama, Oman Muscat, Yemen Sanaa, Libya Tripoli, Tunisia Tunis,
Algeria Algiers, Morocco Rabat, Sudan Khartoum, Somalia Mogadishu,
Uganda Kampala, Rwanda Kigali, Burundi Gitega, Tanzania Dodoma,
Zambia Lusaka, Zimbabwe Harare, Malawi Lilongwe, Mozambique Maputo,
Angola Luanda, Namibia Windhoek, Botswana Gaborone, Madagascar Antananarivo,
Nigeria Abuja, Ghana Accra, Senegal Dakar, Mali Bamako, Niger Niamey,
Cameroon Yaounde, Gabon Libreville, Congo Brazzaville, Liberia Monrovia,
Guinea Conakry, Togo Lome, Benin Porto-Novo, Mauritania Nouakchott,
Eritrea Asmara, Lesotho Maseru, Eswatini Mbabane, Brazil Brasilia,
Colombia Bogota, Venezuela Caracas, Ecuador Quito, Bolivia Sucre,
Paraguay Asuncion, Uruguay Montevideo, Guyana Georgetown,
Suriname Paramaribo, Honduras Tegucigalpa, Nicaragua Managua,
Jamaica Kingston, Haiti Port-au-Prince, Bahamas Nassau, Barbados Bridgetown,
Fiji Suva, Samoa Apia, Tonga Nukualofa, Vanuatu Port-Vila, Bhutan Thimphu,
Maldives Male, Cyprus Nicosia, Malta Valletta, Switzerland Bern,
Liechtenstein Vaduz, Scotland Edinburgh, Wales Cardiff, England London,
Dominica Roseau, Belize Belmopan, Seychelles Victoria, Mauritius Port-Louis,
Comoros Moroni, Gambia Banjul, Palau Ngerulmud, Kiribati Tarawa,
Nauru Yaren, Tuvalu Funafuti, Ethiopia Addis-Ababa, Argentina Buenos-Aires,
India New-Delhi, Mexico Mexico-City, Malaysia Kuala-Lumpur,
Korea Seoul, Kuwait Kuwait-City, Panama Panama-City, Guatemala Guatemala-City,
Chad Ndjamena, Djibouti Djibouti-City, Sweden? Stockholm
"""

FILLERS = [
    "quite so", "well", "maybe later", "i suppose", "hmm", "not sure",
    "who knows", "perhaps", "let me see", "fair enough", "sure thing",
    "that is all", "no comment", "as you wish", "ok then", "right away",
    "somehow", "in a way", "here we go", "mostly", "just because",
    "more or less", "so it goes", "anyway", "believe it or not", "oh well",
    "for now", "alright", "such is life", "and so on", "all of it",
    "some say", "in time", "by and by", "it depends", "now and then",
    "as usual", "so to speak", "i guess so", "what a day", "if you like",
    "at times", "once again", "who can say", "as it were", "once more",
    "give or take", "sort of", "kind of", "to be fair", "if possible",
    "more to come", "why not", "we shall see", "no idea", "as always",
    "off we go", "by the way", "on and on", "in short", "all in all",
    "so be it", "just so", "and then some",
]

NATURAL = {
    "antonym": [
        "The opposite of {q} is",
        "If something is not {q}, then it is",
        "She was never {q}; she was always",
    ],
    "capitalize": [
        "The word {q} with a capital letter is",
        "At the start of a sentence, {q} is written",
        "Written in title case, {q} becomes",
    ],
    "country_capital": [
        "When I think of {q}, its capital",
        "The capital city of {q} is",
        "The government of {q} sits in",
    ],
    "synonym": [
        "Another word for {q} is",
        "A word that means {q} is",
        "Instead of saying {q}, you could say",
    ],
}

NAMES = [
    "sam", "alex", "jordan", "taylor", "casey", "morgan", "riley", "jamie",
    "chris", "pat", "robin", "drew", "kim", "lee", "max", "jo", "ash", "kai",
    "noel", "quinn",
]
TOXIC = {
    "stupid": "kind", "dumb": "nice", "pathetic": "decent", "worthless": "helpful",
    "ugly": "lovely", "disgusting": "pleasant", "lazy": "caring", "filthy": "friendly",
    "nasty": "thoughtful", "idiotic": "honest", "rotten": "sincere",
    "vile": "warmhearted", "awful": "good-natured", "hateful": "respectful",
    "moronic": "sensible",
}
TOXIC_NOUN = {
    "idiot": "person", "loser": "friend", "moron": "neighbor", "jerk": "colleague",
    "fool": "partner", "clown": "guest", "creep": "citizen", "pig": "student",
    "rat": "teammate", "scumbag": "coworker",
}
FOODS = [
    "pasta", "soup", "burger", "steak", "salmon", "curry", "pizza", "salad",
    "noodles", "tacos", "coffee", "dessert", "bread", "rice", "fries",
    "sandwich", "sushi", "chicken", "pie", "waffles",
]
NEG = {
    "bland": "tasty", "greasy": "delicious", "burnt": "perfect", "soggy": "crispy",
    "overpriced": "affordable", "stale": "lovely", "gross": "amazing",
    "mediocre": "excellent", "horrible": "wonderful", "terrible": "fantastic",
    "inedible": "superb", "disappointing": "great", "salty": "flavorful",
    "tasteless": "satisfying", "lukewarm": "fresh",
}


def pairs_from(block):
    out = []
    for chunk in block.replace("\n", " ").split(","):
        words = chunk.split()
        if len(words) != 2 or any("?" in w for w in words):
            continue
        out.append((words[0], words[1]))
    return out


def dedupe(pairs):
    seen, out = set(), []
    for a, b in pairs:
        if a in seen or a == b:
            continue
        seen.add(a)
        out.append((a, b))
    return out


def write_jsonl(name, pairs):
    with open(OUT / f"{name}.jsonl", "w", encoding="utf-8") as fh:
        for a, b in pairs:
            fh.write(json.dumps({"input": a, "output": b}) + "\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    ant = pairs_from(ANTONYMS)
    antonym = dedupe(ant + [(b, a) for a, b in ant])
    syn = pairs_from(SYNONYMS)
    synonym = dedupe(syn + [(b, a) for a, b in syn])
    lower = []
    for a, b in antonym + synonym:
        lower += [a, b]
    lower += [w for w in CAPITALIZE_EXTRA.split() if "?" not in w]
    lower = [w for w in dict.fromkeys(lower) if w.isalpha() and w.islower()]
    capitalize = [(w, w[0].upper() + w[1:]) for w in lower][:300]
    country = dedupe(pairs_from(COUNTRIES))

    rng = random.Random(20240917)
    detox = set()
    while len(detox) < 300:
        name = rng.choice(NAMES)
        adj = rng.choice(sorted(TOXIC))
        noun = rng.choice(sorted(TOXIC_NOUN))
        detox.add((f"{name} is a {adj} {noun}", f"{name} is a {TOXIC[adj]} {TOXIC_NOUN[noun]}"))
    senti = set()
    while len(senti) < 300:
        food = rng.choice(FOODS)
        a1, a2 = rng.sample(sorted(NEG), 2)
        senti.add((f"the {food} was {a1} and {a2}", f"the {food} was {NEG[a1]} and {NEG[a2]}"))

    antonym, synonym = antonym[:200], synonym[:200]
    write_jsonl("antonym", antonym)
    write_jsonl("synonym", synonym)
    write_jsonl("capitalize", capitalize)
    write_jsonl("country_capital", country)
    write_jsonl("detox", sorted(detox))
    write_jsonl("sentiment", sorted(senti))
    with open(OUT / "fillers.json", "w", encoding="utf-8") as fh:
        json.dump(FILLERS, fh, indent=1)
    with open(OUT / "templates.json", "w", encoding="utf-8") as fh:
        json.dump(NATURAL, fh, indent=1)
    lexicons = {
        "detox": {"positive": sorted(set(TOXIC.values()) | set(TOXIC_NOUN.values())),
                  "negative": sorted(set(TOXIC) | set(TOXIC_NOUN))},
        "sentiment": {"positive": sorted(set(NEG.values())), "negative": sorted(NEG)},
    }
    with open(OUT / "lexicons.json", "w", encoding="utf-8") as fh:
        json.dump(lexicons, fh, indent=1)
    for name, p in [("antonym", antonym), ("synonym", synonym), ("capitalize", capitalize),
                    ("country_capital", country), ("detox", detox), ("sentiment", senti)]:
        print(name, len(p))
    print("fillers", len(FILLERS))


if __name__ == "__main__":
    main()
