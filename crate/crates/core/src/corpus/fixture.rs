//! Deterministic synthetic corpora for tests, benches and demos.
//!
//! The email generator produces business-style messages whose nouns come
//! from a few office categories; the replacement noun list spans unrelated
//! categories (animals, food, tools, nature, household) plus the office
//! ones. The background corpus places every noun in category-typical
//! contexts, which is what co-occurrence embeddings need to tell an
//! out-of-place noun from a fitting one.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DocumentSource, RawDocument};

pub const PLACES: &[&str] = &[
    "office",
    "room",
    "lobby",
    "building",
    "warehouse",
    "kitchen",
    "garage",
    "library",
    "cafeteria",
    "hallway",
    "basement",
    "studio",
    "branch",
    "plant",
    "facility",
];
pub const DOCUMENTS: &[&str] = &[
    "report",
    "contract",
    "memo",
    "invoice",
    "draft",
    "agreement",
    "spreadsheet",
    "proposal",
    "budget",
    "presentation",
    "schedule",
    "forecast",
    "summary",
    "letter",
    "file",
    "statement",
    "analysis",
    "document",
    "agenda",
    "estimate",
];
pub const EVENTS: &[&str] = &[
    "meeting",
    "visit",
    "conference",
    "lunch",
    "dinner",
    "review",
    "interview",
    "workshop",
    "session",
    "lecture",
    "seminar",
    "party",
    "appointment",
    "retreat",
];
pub const ROLES: &[&str] = &[
    "manager",
    "client",
    "lawyer",
    "analyst",
    "board",
    "customer",
    "supplier",
    "trader",
    "accountant",
    "director",
    "assistant",
    "engineer",
    "consultant",
    "auditor",
    "broker",
    "vendor",
];
pub const COMMODITIES: &[&str] = &["gas", "power", "oil", "electricity", "coal", "crude", "propane", "storage"];
pub const ANIMALS: &[&str] = &[
    "dog", "cat", "horse", "bird", "fish", "cow", "pig", "sheep", "chicken", "tiger", "lion", "bear", "mouse",
    "rabbit", "snake", "frog", "duck", "goose", "wolf", "fox", "deer",
];
pub const FOODS: &[&str] = &[
    "apple",
    "orange",
    "banana",
    "bread",
    "cheese",
    "butter",
    "milk",
    "egg",
    "rice",
    "pasta",
    "soup",
    "salad",
    "sandwich",
    "pizza",
    "cake",
    "cookie",
    "chocolate",
    "sugar",
];
pub const TOOLS: &[&str] = &[
    "hammer", "nail", "screw", "wrench", "drill", "shovel", "rope", "ladder", "bucket", "brush", "glue", "tape",
    "wire", "cable", "battery", "engine", "wheel", "tire",
];
pub const NATURE: &[&str] = &[
    "storm", "rain", "wind", "cloud", "sun", "moon", "sky", "ice", "stone", "sand", "dust", "mud", "grass", "leaf",
    "flower", "seed", "root", "branch", "tree", "rock", "river", "lake", "mountain", "forest", "beach",
];
pub const HOUSEHOLD: &[&str] = &[
    "chair", "sofa", "lamp", "bed", "pillow", "blanket", "mirror", "clock", "carpet", "curtain", "bottle", "cup",
    "plate", "spoon", "fork", "knife",
];

const WEEKDAYS: &[&str] = &["Monday", "Tuesday", "Wednesday", "Thursday", "Friday"];
const DOC_ADJECTIVES: &[&str] = &["", "", "", "new ", "final ", "revised ", "updated "];
const TAILS: &[&str] = &[
    "",
    "",
    "",
    "",
    "",
    " if possible",
    " when you get a chance",
    " as soon as possible",
    " please",
    " again",
    " soon",
    " today",
    " tomorrow",
    " for now",
    " right away",
    " as well",
    " too",
    " this afternoon",
    " later",
    " for me",
];
const OPENERS: &[&str] = &[
    "Also",
    "Actually",
    "Meanwhile",
    "Anyway",
    "However",
    "Honestly",
    "Unfortunately",
    "Hopefully",
    "Basically",
    "Frankly",
    "Well",
    "So",
    "Now",
    "Otherwise",
];

/// Email templates. `{P}` place, `{D}` document, `{E}` event, `{R}` role,
/// `{C}` commodity, `{W}` weekday, `{A}` optional adjective. The first slot
/// holds the sentence's first noun.
pub const EMAIL_TEMPLATES: &[&str] = &[
    "I will be out of the {P} on {W}.",
    "Please send the {A}{D} to the {R} by {W}.",
    "Can you look over the {A}{D} before the {E} on {W}?",
    "The {E} has been moved to {W} afternoon.",
    "We need to finalize the {D} with the {R} this week.",
    "Let me know if the {D} is ready for the {E}.",
    "I left the {D} on your desk in the {P}.",
    "Did you get the {A}{D} I sent you yesterday?",
    "Our {E} with the {R} is scheduled for {W} morning.",
    "The {R} wants to discuss the {C} prices at the {E}.",
    "Please forward the {D} to everyone on the {R} list.",
    "I am running late for the {E} so please start without me.",
    "Could you print the {D} and bring it to the {E}?",
    "We should meet in the {P} after the {E} today.",
    "The {C} deal with the {R} is still pending.",
    "Is the {P} available for our {E} on {W}?",
    "The {R} called about the {D} again this morning.",
    "Attached is the {A}{D} for your review.",
    "I just talked to the {R} and they agreed to the {D}.",
    "Please check the {C} numbers before you sign the {D}.",
    "Where did you put the {D} from the {E}?",
    "The {P} will be closed on {W} for maintenance.",
    "Who is going to the {E} with the {R} tomorrow?",
    "The {C} trade cost us a fortune last month.",
    "My {R} asked me to update the {D} before {W}.",
    "They moved the {E} to the {P} on the third floor.",
    "Can we postpone the {E} until next {W}?",
    "Do not forget to bring the {D} to the {E}.",
    "The {A}{D} looks good to me, go ahead and send it.",
    "I have not seen the {D} from the {R} yet.",
    "There is something wrong with the {C} forecast for {W}.",
    "Please call me after the {E} if you have questions.",
    "How much {C} did we sell to the {R} last week?",
    "I will bring the {D} to the {P} first thing tomorrow.",
    "The {R} is not happy with the {D} we sent.",
    "Do you know when the {E} with the {R} starts?",
    "We are still waiting for the {D} from the {R}.",
    "I booked the {P} for the {E} next {W}.",
    "Sorry I missed the {E}, was anything decided about the {D}?",
    "Please keep the {D} confidential until the {E}.",
];

const GREETINGS: &[&str] = &["Hi all,", "Hello,", "Hi,", "Team,", "Good morning,", ""];
const SIGNOFFS: &[&str] = &["Thanks.", "Regards.", "Thank you!", "Best.", "Cheers."];

fn pick<'a, R: Rng>(rng: &mut R, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).copied().unwrap_or("")
}

/// Fills one email template with random slot values, an optional opening
/// adverb and an optional tail.
pub fn fill_email_template<R: Rng>(template: &str, rng: &mut R) -> String {
    let mut out = String::with_capacity(template.len() + 48);
    let mut owned;
    let mut rest = template;
    if rng.gen_bool(0.5) {
        out.push_str(pick(rng, OPENERS));
        out.push_str(", ");
        if !template.starts_with("I ") {
            owned = template[..1].to_lowercase();
            owned.push_str(&template[1..]);
            rest = &owned;
        }
    }
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let end = start + rest[start..].find('}').expect("closed slot");
        let value = match &rest[start + 1..end] {
            "P" => pick(rng, PLACES),
            "D" => pick(rng, DOCUMENTS),
            "E" => pick(rng, EVENTS),
            "R" => pick(rng, ROLES),
            "C" => pick(rng, COMMODITIES),
            "W" => pick(rng, WEEKDAYS),
            "A" => pick(rng, DOC_ADJECTIVES),
            other => panic!("unknown slot {other}"),
        };
        out.push_str(value);
        rest = &rest[end + 1..];
    }
    let (body, punct) = rest.split_at(rest.len() - 1);
    out.push_str(body);
    out.push_str(pick(rng, TAILS));
    out.push_str(punct);
    out
}

fn email_body<R: Rng>(rng: &mut R, sentences: usize) -> String {
    let mut body = String::new();
    let greeting = pick(rng, GREETINGS);
    if !greeting.is_empty() {
        body.push_str(greeting);
        body.push_str("\n\n");
    }
    let lines: Vec<String> = (0..sentences).map(|_| fill_email_template(pick(rng, EMAIL_TEMPLATES), rng)).collect();
    body.push_str(&lines.join(" "));
    body.push_str("\n\n");
    body.push_str(pick(rng, SIGNOFFS));
    if rng.gen_bool(0.3) {
        body.push_str("\n\n-----Original Message-----\n");
        for _ in 0..rng.gen_range(1..3) {
            body.push_str("> ");
            body.push_str(&fill_email_template(pick(rng, EMAIL_TEMPLATES), rng));
            body.push('\n');
        }
    }
    body
}

/// Generates emails until at least `sentences` template sentences have been
/// written (quoted replies not counted).
pub fn email_corpus(sentences: usize, seed: u64) -> Vec<RawDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::new();
    let mut written = 0;
    while written < sentences {
        let n = rng.gen_range(2..=6).min(sentences - written).max(1);
        let mut doc = RawDocument::new(format!("msg{:06}", docs.len()), email_body(&mut rng, n), DocumentSource::Email);
        doc.meta.insert("author".into(), format!("user{:03}@example.com", rng.gen_range(0..200)));
        docs.push(doc);
        written += n;
    }
    docs
}

/// Replacement noun inventory: every category, office nouns included.
pub fn replacement_nouns() -> Vec<String> {
    let mut out: Vec<String> =
        [PLACES, DOCUMENTS, EVENTS, ROLES, COMMODITIES, ANIMALS, FOODS, TOOLS, NATURE, HOUSEHOLD]
            .iter()
            .flat_map(|c| c.iter().map(|s| s.to_string()))
            .collect();
    out.sort();
    out.dedup();
    out
}

const BACKGROUND: &[(&[&str], &[&str])] = &[
    (
        ANIMALS,
        &[
            "The {X} was sleeping in the yard all afternoon.",
            "We saw a {X} near the river this morning.",
            "My neighbor feeds the {X} every evening.",
            "A wild {X} ran across the road.",
            "The kids wanted to pet the {X} at the farm.",
            "Our {X} is afraid of loud noises.",
        ],
    ),
    (
        FOODS,
        &[
            "I ate some {X} for lunch today.",
            "Could you buy {X} at the store on your way home?",
            "The {X} tasted really good with coffee.",
            "We ran out of {X} again.",
            "She baked fresh {X} for the kids.",
            "There is some {X} left in the fridge.",
        ],
    ),
    (
        TOOLS,
        &[
            "I need a {X} to fix the fence.",
            "He keeps the {X} in the shed.",
            "Hand me the {X} from the toolbox.",
            "The {X} broke while we were repairing the roof.",
            "You should use a {X} for that job.",
        ],
    ),
    (
        NATURE,
        &[
            "The {X} looked beautiful this evening.",
            "We watched the {X} from the hill.",
            "A {X} covered the whole valley.",
            "The hikers walked past the {X} at dawn.",
            "There was {X} everywhere after the flood.",
        ],
    ),
    (
        HOUSEHOLD,
        &[
            "Put the {X} next to the bed.",
            "She bought a new {X} for the living room.",
            "The {X} in the bedroom is broken.",
            "We moved the old {X} into the attic.",
        ],
    ),
];

/// General-domain sentences for training word embeddings: every noun
/// category in its own typical contexts, plus office email sentences.
pub fn background_corpus(sentences: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    (0..sentences)
        .map(|i| {
            if i % 2 == 0 {
                fill_email_template(pick(&mut rng, EMAIL_TEMPLATES), &mut rng)
            } else {
                let (words, templates) = BACKGROUND[rng.gen_range(0..BACKGROUND.len())];
                pick(&mut rng, templates).replace("{X}", pick(&mut rng, words))
            }
        })
        .collect()
}

const COUNTRIES: &[&str] =
    &["Mexico", "Colombia", "Canada", "Brazil", "France", "Germany", "Peru", "Spain", "Italy", "Ukraine"];
const CITIES: &[&str] =
    &["Paris", "Berlin", "Toronto", "Bogota", "Lima", "Madrid", "Rome", "Chicago", "Sydney", "Lagos"];
const TOPICS: &[&str] = &["housing", "energy", "health", "education", "tax", "pension", "climate", "trade", "banking"];
const DRUGS: &[&str] = &["cocaine", "marijuana", "heroin"];

const NEWS_TEMPLATES: &[&str] = &[
    "The government of {K} announced new {T} rules on Monday.",
    "Thousands of people protested in {Y} against the {T} reform.",
    "Experts say the {T} crisis in {K} will get worse before it gets better.",
    "I can not believe the election in {K} is already next month.",
    "This is exactly what happens when nobody is held accountable for {T} policy.",
    "The prime minister of {K} met with leaders from {K} today.",
    "Honestly the {T} situation in {Y} has been a mess for years.",
    "Why does nobody talk about the {T} scandal in {K} anymore?",
    "The parliament in {K} voted against the {T} bill last night.",
    "Prices in {Y} keep going up and wages are not keeping pace.",
    "I lived in {Y} for five years and the {T} problems were always there.",
];

const DRUG_TEMPLATES: &[&str] = &[
    "Police in {K} seized two tons of {G} at the port.",
    "{G} use among teenagers in {Y} has doubled since last year.",
    "The cartel was smuggling {G} through {K} for years.",
    "Legalizing {G} would take money away from the gangs in {Y}.",
    "They found {G} and cash hidden in a truck near {Y}.",
    "{G} and {G} are flooding the streets of {Y} right now.",
    "The government of {K} wants to decriminalize {G} possession.",
    "My cousin in {Y} got arrested for selling {G} last summer.",
];

const FOREIGN: &[&str] = &[
    "Die Regierung hat heute neue Regeln für den Wohnungsmarkt angekündigt.",
    "Ik snap echt niet waarom niemand hier iets aan doet in dit land.",
    "Le gouvernement a annoncé de nouvelles mesures pour la santé publique.",
    "La policía encontró mucha cocaína en el puerto la semana pasada.",
    "Die Polizei hat in Berlin Kokain und Heroin im Wert von Millionen gefunden.",
];

fn fill_news<R: Rng>(template: &str, rng: &mut R) -> String {
    let mut out = template.to_string();
    for (slot, bank) in [("{K}", COUNTRIES), ("{Y}", CITIES), ("{T}", TOPICS), ("{G}", DRUGS)] {
        while let Some(i) = out.find(slot) {
            let mut value = pick(rng, bank).to_string();
            if i == 0 {
                value = super::match_case("X", &value);
            }
            out.replace_range(i..i + slot.len(), &value);
        }
    }
    out
}

/// Comment dumps `(general, drug-mentioning)` with a sprinkling of
/// non-English comments in both.
pub fn reddit_comments(general: usize, drug: usize, seed: u64) -> (Vec<RawDocument>, Vec<RawDocument>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut make = |n: usize, templates: &[&str], prefix: &str| -> Vec<RawDocument> {
        (0..n)
            .map(|i| {
                let body = if rng.gen_bool(0.1) {
                    pick(&mut rng, FOREIGN).to_string()
                } else {
                    let k = rng.gen_range(1..=2);
                    (0..k).map(|_| fill_news(pick(&mut rng, templates), &mut rng)).collect::<Vec<_>>().join(" ")
                };
                RawDocument::new(format!("{prefix}{i:06}"), body, DocumentSource::Comment)
            })
            .collect()
    };
    let general_docs = make(general, NEWS_TEMPLATES, "t1_n");
    let drug_docs = make(drug, DRUG_TEMPLATES, "t1_d");
    (general_docs, drug_docs)
}
