//! Seeded synthetic tables for benchmarks and end-to-end tests.
//!
//! Each generator returns a [`Schema`] with realistic-looking columns: ids,
//! names, categories, dates, URLs, money amounts, counts and ratings. The
//! three tables share several column kinds (dates, countries, URLs, ratings,
//! prices) under different names.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smutf_core::{Column, Schema};

const FIRST: &[&str] = &[
    "James", "Mary", "Robert", "Patricia", "John", "Jennifer", "Michael", "Linda", "David",
    "Elizabeth", "William", "Barbara", "Richard", "Susan", "Joseph", "Jessica", "Thomas", "Sarah",
    "Carlos", "Karen", "Ahmed", "Yuki", "Priya", "Chen", "Olga", "Lucas", "Sofia", "Mateo",
    "Amara", "Noah", "Ingrid", "Kofi",
];
const LAST: &[&str] = &[
    "Smith", "Johnson", "Williams", "Brown", "Jones", "Garcia", "Miller", "Davis", "Rodriguez",
    "Martinez", "Hernandez", "Lopez", "Gonzalez", "Wilson", "Anderson", "Tanaka", "Nguyen",
    "Kowalski", "Okafor", "Schmidt", "Rossi", "Dubois", "Silva", "Kim", "Patel", "Ivanova",
];
const WORDS: &[&str] = &[
    "Silent", "River", "Night", "Golden", "Shadow", "Empire", "Winter", "Storm", "Lost", "City",
    "Dream", "Fire", "Ocean", "Last", "Journey", "Broken", "Glass", "Hidden", "Kingdom", "Star",
    "Echo", "Iron", "Crimson", "Garden", "Midnight", "Paper", "Wolf", "Summer", "Distant", "Light",
];
const GENRES: &[&str] = &[
    "Drama", "Comedy", "Action", "Thriller", "Horror", "Romance", "Documentary", "Animation",
    "Science Fiction", "Fantasy",
];
const LANGUAGES: &[&str] = &[
    "English", "French", "Spanish", "German", "Japanese", "Korean", "Hindi", "Italian", "Mandarin",
];
const COUNTRIES: &[&str] = &[
    "United States", "France", "Spain", "Germany", "Japan", "South Korea", "India", "Italy",
    "China", "Brazil", "Nigeria", "Canada", "Mexico", "Sweden",
];
const CITIES: &[&str] = &[
    "Springfield", "Riverside", "Lakewood", "Fairview", "Madrid", "Lyon", "Osaka", "Toronto",
    "Lagos", "Munich", "Pune", "Porto", "Busan", "Turin", "Austin", "Denver",
];
const BRANDS: &[&str] = &[
    "Acme", "Globex", "Initech", "Umbrella", "Stark", "Wayne", "Hooli", "Vandelay", "Soylent",
    "Tyrell",
];
const CATEGORIES: &[&str] = &[
    "Electronics", "Kitchen", "Garden", "Toys", "Books", "Sports", "Beauty", "Automotive",
    "Office", "Outdoors",
];
const ADJECTIVES: &[&str] = &[
    "Compact", "Deluxe", "Portable", "Wireless", "Classic", "Smart", "Ultra", "Eco", "Pro",
    "Mini",
];
const NOUNS: &[&str] = &[
    "Blender", "Speaker", "Lamp", "Backpack", "Kettle", "Drone", "Camera", "Chair", "Watch",
    "Router", "Toaster", "Monitor",
];
const COLORS: &[&str] = &[
    "Red", "Blue", "Black", "White", "Green", "Silver", "Gold", "Gray", "Purple", "Orange",
];
const STUDIOS: &[&str] = &[
    "Paramount", "Lionsgate", "Miramax", "Pathe", "Toho", "Gaumont", "Legendary", "Ghibli",
    "Amblin", "Focus",
];
const CERTIFICATES: &[&str] = &["G", "PG", "PG-13", "R", "NC-17", "U", "12A", "15", "18"];
const MATERIALS: &[&str] = &[
    "Steel", "Plastic", "Wood", "Cotton", "Glass", "Leather", "Aluminum", "Bamboo", "Ceramic",
    "Nylon",
];
const SHIPPING: &[&str] = &["Standard", "Express", "Overnight", "Pickup", "Freight", "Economy"];
const JOBS: &[&str] = &[
    "Engineer", "Analyst", "Manager", "Designer", "Consultant", "Director", "Technician",
    "Recruiter", "Accountant", "Scientist",
];
const TEAMS: &[&str] = &[
    "Falcons", "Rockets", "Otters", "Comets", "Pioneers", "Hawks", "Lynx", "Mariners",
];
const DOMAINS: &[&str] = &["example.com", "mail.test", "corp.example", "inbox.test"];
const DEPARTMENTS: &[&str] = &[
    "Engineering", "Sales", "Marketing", "Finance", "Support", "Research", "Legal", "Operations",
];

fn rng(seed: u64, table: &str) -> ChaCha8Rng {
    let salt = table.bytes().fold(0u64, |h, b| h.wrapping_mul(131).wrapping_add(b as u64));
    ChaCha8Rng::seed_from_u64(seed ^ salt)
}

fn pick<'a>(rng: &mut ChaCha8Rng, list: &[&'a str]) -> &'a str {
    list.choose(rng).copied().unwrap_or_default()
}

fn date(rng: &mut ChaCha8Rng, from: i32, to: i32) -> String {
    format!(
        "{}-{:02}-{:02}",
        rng.gen_range(from..=to),
        rng.gen_range(1..=12),
        rng.gen_range(1..=28)
    )
}

/// `$1,234,567` style amounts.
fn dollars(amount: u64) -> String {
    let digits = amount.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    format!("${out}")
}

fn build(name: &str, columns: Vec<(&str, Vec<String>)>) -> Schema {
    Schema::new(
        name,
        columns
            .into_iter()
            .map(|(n, v)| Column::new(n, v))
            .collect(),
    )
    .expect("generated tables have columns")
}

pub fn movies(rows: usize, seed: u64) -> Schema {
    let mut r = rng(seed, "movies");
    let mut cols: Vec<(&str, Vec<String>)> = [
        "movie_id", "title", "release_year", "release_date", "director", "genre", "rating",
        "votes", "budget", "language", "country", "poster_url", "duration_min", "studio",
        "certificate", "filming_city",
    ]
    .iter()
    .map(|n| (*n, Vec::with_capacity(rows)))
    .collect();
    for i in 0..rows {
        let year = r.gen_range(1950..=2023);
        let values = [
            format!("M{:05}", 1000 + i * 7),
            format!("{} {}", pick(&mut r, WORDS), pick(&mut r, WORDS)),
            year.to_string(),
            date(&mut r, year, year),
            format!("{} {}", pick(&mut r, FIRST), pick(&mut r, LAST)),
            pick(&mut r, GENRES).to_string(),
            format!("{:.1}", r.gen_range(1.0..10.0)),
            r.gen_range(10..2_000_000u64).to_string(),
            dollars(r.gen_range(100..3000u64) * 100_000),
            pick(&mut r, LANGUAGES).to_string(),
            pick(&mut r, COUNTRIES).to_string(),
            format!("https://img.example.com/posters/{}.jpg", r.gen_range(10_000..99_999)),
            r.gen_range(75..210).to_string(),
            pick(&mut r, STUDIOS).to_string(),
            pick(&mut r, CERTIFICATES).to_string(),
            pick(&mut r, CITIES).to_string(),
        ];
        for (c, v) in cols.iter_mut().zip(values) {
            c.1.push(v);
        }
    }
    build("movies", cols)
}

pub fn products(rows: usize, seed: u64) -> Schema {
    let mut r = rng(seed, "products");
    let mut cols: Vec<(&str, Vec<String>)> = [
        "sku", "product_name", "brand", "category", "price", "stock_count", "avg_rating",
        "launch_date", "origin_country", "product_url", "weight_kg", "color", "material",
        "warehouse_city", "shipping",
    ]
    .iter()
    .map(|n| (*n, Vec::with_capacity(rows)))
    .collect();
    for i in 0..rows {
        let values = [
            format!("SKU-{:06}", 20_000 + i * 13),
            format!("{} {} {}", pick(&mut r, BRANDS), pick(&mut r, ADJECTIVES), pick(&mut r, NOUNS)),
            pick(&mut r, BRANDS).to_string(),
            pick(&mut r, CATEGORIES).to_string(),
            format!("${}.{:02}", r.gen_range(2..900), r.gen_range(0..100)),
            r.gen_range(0..5000).to_string(),
            format!("{:.1}", r.gen_range(1.0..5.0)),
            date(&mut r, 2005, 2023),
            pick(&mut r, COUNTRIES).to_string(),
            format!("https://shop.example.com/item/{}", r.gen_range(100_000..999_999)),
            format!("{:.2}", r.gen_range(0.05..25.0)),
            pick(&mut r, COLORS).to_string(),
            pick(&mut r, MATERIALS).to_string(),
            pick(&mut r, CITIES).to_string(),
            pick(&mut r, SHIPPING).to_string(),
        ];
        for (c, v) in cols.iter_mut().zip(values) {
            c.1.push(v);
        }
    }
    build("products", cols)
}

pub fn people(rows: usize, seed: u64) -> Schema {
    let mut r = rng(seed, "people");
    let mut cols: Vec<(&str, Vec<String>)> = [
        "person_id", "first_name", "last_name", "email", "phone", "birth_date", "city",
        "country", "company", "department", "salary", "age", "website", "job_title",
        "favorite_color", "team",
    ]
    .iter()
    .map(|n| (*n, Vec::with_capacity(rows)))
    .collect();
    for i in 0..rows {
        let first = pick(&mut r, FIRST);
        let last = pick(&mut r, LAST);
        let birth_year = r.gen_range(1950..=2004);
        let values = [
            format!("P-{:05}", 500 + i * 3),
            first.to_string(),
            last.to_string(),
            format!(
                "{}.{}@{}",
                first.to_lowercase(),
                last.to_lowercase(),
                pick(&mut r, DOMAINS)
            ),
            format!(
                "+1-{}-{:03}-{:04}",
                r.gen_range(200..999),
                r.gen_range(0..1000),
                r.gen_range(0..10_000)
            ),
            date(&mut r, birth_year, birth_year),
            pick(&mut r, CITIES).to_string(),
            pick(&mut r, COUNTRIES).to_string(),
            format!("{} {}", pick(&mut r, BRANDS), ["Inc", "LLC", "Group", "Labs"][r.gen_range(0..4)]),
            pick(&mut r, DEPARTMENTS).to_string(),
            dollars(r.gen_range(30..250u64) * 1000),
            (2024 - birth_year).to_string(),
            format!("https://{}{}.example.org", first.to_lowercase(), r.gen_range(1..999)),
            pick(&mut r, JOBS).to_string(),
            pick(&mut r, COLORS).to_string(),
            pick(&mut r, TEAMS).to_string(),
        ];
        for (c, v) in cols.iter_mut().zip(values) {
            c.1.push(v);
        }
    }
    build("people", cols)
}

/// All three tables, in a fixed order.
pub fn all_tables(rows: usize, seed: u64) -> Vec<Schema> {
    vec![movies(rows, seed), products(rows, seed), people(rows, seed)]
}
