//! Shared fixtures: a synthetic factoid dataset and a stand-in HTTP service.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;

use persianrag::core::eval::QAExample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

const SYLLABLES: [&str; 12] = ["دا", "ری", "وش", "مه", "سا", "نو", "کا", "بهر", "ژی", "فر", "زا", "لا"];
const CITIES: [&str; 10] = ["شیراز", "تبریز", "اصفهان", "مشهد", "یزد", "کرمان", "رشت", "همدان", "اراک", "قزوین"];
const COLORS: [&str; 8] = ["سبز", "آبی", "سرخ", "زرد", "سفید", "سیاه", "بنفش", "نارنجی"];

/// `n` distinct made-up words, three syllables each.
pub fn made_up_words(n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut all = BTreeSet::new();
    for a in SYLLABLES {
        for b in SYLLABLES {
            for c in SYLLABLES {
                all.insert(format!("{a}{b}{c}"));
            }
        }
    }
    let mut all: Vec<String> = all.into_iter().collect();
    all.shuffle(rng);
    assert!(n <= all.len());
    all.truncate(n);
    all
}

/// One paragraph of three sentences per example about a made-up person. The
/// question asks about one sentence, which is also the gold answer.
pub fn synthetic_dataset(n: usize, seed: u64) -> Vec<QAExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = made_up_words(2 * n, &mut rng);
    (0..n)
        .map(|k| {
            let name = &words[2 * k];
            let book = &words[2 * k + 1];
            let city = CITIES[rng.gen_range(0..CITIES.len())];
            let color = COLORS[rng.gen_range(0..COLORS.len())];
            let year: u32 = rng.gen_range(1300..1400);
            let born = format!("{name} در شهر {city} به دنیا آمد");
            let wrote = format!("{name} در سال {year} کتاب {book} را نوشت");
            let likes = format!("رنگ محبوب {name} {color} است");
            let paragraph = format!("{born}. {wrote}. {likes}.");
            let (question, gold) = match k % 3 {
                0 => (format!("{name} در کدام شهر به دنیا آمد؟"), born),
                1 => (format!("{name} در چه سالی کتاب {book} را نوشت؟"), wrote),
                _ => (format!("رنگ محبوب {name} چیست؟"), likes),
            };
            let mut ex = QAExample::new(paragraph, question, gold);
            ex.source_file = Some(format!("doc{k}.txt"));
            ex
        })
        .collect()
}

/// How the stand-in service answers one path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Behaviour {
    Ok,
    Status(u16),
    /// 200 with a body that does not match the contract.
    Garbage,
}

#[derive(Debug, Clone)]
pub struct MockConfig {
    pub dim: usize,
    pub embed: Behaviour,
    pub rerank: Behaviour,
    pub generate: Behaviour,
}

impl Default for MockConfig {
    fn default() -> Self {
        Self { dim: 16, embed: Behaviour::Ok, rerank: Behaviour::Ok, generate: Behaviour::Ok }
    }
}

/// Minimal HTTP/1.1 server for the three service endpoints. Each connection
/// carries one request.
pub struct MockServer {
    pub url: String,
    pub requests: Arc<Mutex<Vec<(String, Value)>>>,
}

impl MockServer {
    pub fn start(config: MockConfig) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&requests);
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let config = config.clone();
                let log = Arc::clone(&log);
                thread::spawn(move || serve(stream, &config, &log));
            }
        });
        Self { url, requests }
    }

    pub fn count(&self, path: &str) -> usize {
        self.requests.lock().unwrap().iter().filter(|(p, _)| p == path).count()
    }
}

/// The vector the stand-in embedder returns: character counts folded into `dim` buckets.
pub fn mock_vector(text: &str, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    for c in text.chars().filter(|c| !c.is_whitespace()) {
        v[c as usize % dim] += 1.0;
    }
    v
}

fn words(s: &str) -> BTreeSet<&str> {
    s.split_whitespace().collect()
}

fn read_request(stream: &mut TcpStream) -> Option<(String, Vec<u8>)> {
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    reader.read_line(&mut line).ok()?;
    let path = line.split_whitespace().nth(1)?.to_string();
    let mut length = 0;
    let mut chunked = false;
    loop {
        let mut h = String::new();
        reader.read_line(&mut h).ok()?;
        let h = h.trim_end();
        if h.is_empty() {
            break;
        }
        let (k, v) = h.split_once(':')?;
        match k.trim().to_ascii_lowercase().as_str() {
            "content-length" => length = v.trim().parse().ok()?,
            "transfer-encoding" => chunked = v.trim().eq_ignore_ascii_case("chunked"),
            _ => {}
        }
    }
    let mut body = Vec::new();
    if chunked {
        loop {
            let mut size = String::new();
            reader.read_line(&mut size).ok()?;
            let n = usize::from_str_radix(size.trim(), 16).ok()?;
            let mut part = vec![0; n + 2];
            reader.read_exact(&mut part).ok()?;
            if n == 0 {
                break;
            }
            body.extend_from_slice(&part[..n]);
        }
    } else {
        body.resize(length, 0);
        reader.read_exact(&mut body).ok()?;
    }
    Some((path, body))
}

fn serve(mut stream: TcpStream, config: &MockConfig, log: &Mutex<Vec<(String, Value)>>) {
    let Some((path, body)) = read_request(&mut stream) else { return };
    let req: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
    log.lock().unwrap().push((path.clone(), req.clone()));
    let behaviour = match path.as_str() {
        "/embed" => config.embed,
        "/rerank" => config.rerank,
        "/generate" => config.generate,
        _ => Behaviour::Status(404),
    };
    let (status, payload) = match behaviour {
        Behaviour::Status(code) => (code, "{\"error\":\"boom\"}".to_string()),
        Behaviour::Garbage => (200, "{\"unexpected\": true}".to_string()),
        Behaviour::Ok => (200, respond(&path, &req, config.dim).to_string()),
    };
    let reply = format!(
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    );
    let _ = stream.write_all(reply.as_bytes());
    let _ = stream.flush();
}

fn respond(path: &str, req: &Value, dim: usize) -> Value {
    match path {
        "/embed" => {
            let texts: Vec<&str> = req["texts"].as_array().unwrap().iter().map(|t| t.as_str().unwrap()).collect();
            json!({ "dim": dim, "vectors": texts.iter().map(|t| mock_vector(t, dim)).collect::<Vec<_>>() })
        }
        "/rerank" => {
            let q = words(req["query"].as_str().unwrap());
            let docs = req["documents"].as_array().unwrap();
            let top_n = req["top_n"].as_u64().unwrap() as usize;
            let mut results: Vec<(usize, f64)> = docs
                .iter()
                .enumerate()
                .map(|(i, d)| (i, words(d.as_str().unwrap()).intersection(&q).count() as f64))
                .collect();
            results.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            results.truncate(top_n);
            json!({ "results": results.iter().map(|(i, s)| json!({"index": i, "relevance_score": s})).collect::<Vec<_>>() })
        }
        _ => {
            let prompt = req["prompt"].as_str().unwrap();
            let query = prompt.split("### User Query\n").nth(1).and_then(|r| r.lines().next()).unwrap_or("");
            json!({ "text": format!("  پاسخ به: {query}  ") })
        }
    }
}
