//! Paginated photo downloading against a configured endpoint.
//!
//! The endpoint protocol is deliberately tiny: a page URL (built from a
//! template with `{username}` and `{page}` placeholders) returns JSON
//! `{"photos": [{"url": ...}], "next_page": 2}` where `next_page` is absent
//! on the last page, and each photo URL serves raw image bytes with an
//! `image/*` content type.

use super::{photo_id, CorpusError, LegislatorRecord, PhotoRecord};
use serde::Deserialize;
use std::path::Path;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

const RETRIES: u32 = 3;
const BACKOFF_BASE: Duration = Duration::from_millis(50);

#[derive(Debug, Clone)]
pub struct FetchLimits {
    pub max_photos: usize,
    pub rate_per_sec: f64,
}

impl Default for FetchLimits {
    fn default() -> Self {
        FetchLimits {
            max_photos: 100,
            rate_per_sec: 10.0,
        }
    }
}

#[derive(Debug, Default)]
pub struct FetchOutcome {
    /// One record per file now present for the member, sorted by photo_id.
    pub records: Vec<PhotoRecord>,
    /// URLs that still failed after retries, with the reason.
    pub failures: Vec<String>,
    pub skipped_non_image: usize,
}

#[derive(Deserialize)]
struct PhotoPage {
    photos: Vec<PhotoItem>,
    #[serde(default)]
    next_page: Option<u32>,
}

#[derive(Deserialize)]
struct PhotoItem {
    url: String,
}

struct Pacer {
    min_interval: Duration,
    last: Option<Instant>,
}

impl Pacer {
    fn new(rate_per_sec: f64) -> Self {
        Pacer {
            min_interval: Duration::from_secs_f64(1.0 / rate_per_sec),
            last: None,
        }
    }

    fn wait(&mut self) {
        if let Some(last) = self.last {
            let elapsed = last.elapsed();
            if elapsed < self.min_interval {
                std::thread::sleep(self.min_interval - elapsed);
            }
        }
        self.last = Some(Instant::now());
    }
}

/// GET with retries and exponential backoff; returns (content type, body).
fn get_with_retry(
    agent: &ureq::Agent,
    url: &str,
    pacer: &mut Pacer,
) -> Result<(String, Vec<u8>), String> {
    let mut last_err = String::new();
    for attempt in 0..RETRIES {
        if attempt > 0 {
            std::thread::sleep(BACKOFF_BASE * 2u32.pow(attempt - 1));
        }
        pacer.wait();
        match agent.get(url).call() {
            Ok(resp) => {
                let content_type = resp.content_type().to_string();
                let mut body = Vec::new();
                use std::io::Read;
                match resp.into_reader().read_to_end(&mut body) {
                    Ok(_) => return Ok((content_type, body)),
                    Err(e) => last_err = format!("read failed: {e}"),
                }
            }
            Err(e) => last_err = e.to_string(),
        }
    }
    Err(last_err)
}

fn extension_for(content_type: &str) -> Option<&'static str> {
    match content_type {
        "image/jpeg" => Some("jpg"),
        "image/png" => Some("png"),
        _ => None,
    }
}

/// Path of an already-downloaded photo, if any extension variant exists.
fn existing_file(dir: &Path, pid: &str) -> Option<std::path::PathBuf> {
    for ext in ["jpg", "jpeg", "png"] {
        let candidate = dir.join(format!("{pid}.{ext}"));
        if candidate.is_file() {
            return Some(candidate);
        }
    }
    None
}

/// Downloads up to `limits.max_photos` photos for one member into
/// `<root>/<member_id>/`, skipping files already present (resume) and
/// recording per-URL failures instead of aborting. Members without a
/// username fetch nothing.
pub fn fetch_photos(
    record: &LegislatorRecord,
    template: &str,
    root: &Path,
    limits: &FetchLimits,
) -> Result<FetchOutcome, CorpusError> {
    if !template.contains("{username}") || !template.contains("{page}") {
        return Err(CorpusError::Validation(format!(
            "endpoint template must contain {{username}} and {{page}}, got {template:?}"
        )));
    }
    if limits.rate_per_sec <= 0.0 {
        return Err(CorpusError::Validation(
            "rate_per_sec must be positive".into(),
        ));
    }
    let mut outcome = FetchOutcome::default();
    let Some(username) = record.facebook_username.as_deref() else {
        return Ok(outcome);
    };
    let member_dir = root.join(&record.member_id);
    std::fs::create_dir_all(&member_dir).map_err(|e| CorpusError::Io {
        path: member_dir.display().to_string(),
        source: e,
    })?;

    let agent = ureq::AgentBuilder::new()
        .timeout(Duration::from_secs(30))
        .build();
    let mut pacer = Pacer::new(limits.rate_per_sec);
    let mut page = 1u32;
    loop {
        if outcome.records.len() >= limits.max_photos {
            break;
        }
        let page_url = template
            .replace("{username}", username)
            .replace("{page}", &page.to_string());
        let (_, body) = match get_with_retry(&agent, &page_url, &mut pacer) {
            Ok(r) => r,
            Err(msg) => {
                outcome.failures.push(format!("{page_url}: {msg}"));
                break;
            }
        };
        let listing: PhotoPage = serde_json::from_slice(&body).map_err(|e| CorpusError::Http {
            url: page_url.clone(),
            msg: format!("bad photo listing: {e}"),
        })?;
        for item in &listing.photos {
            if outcome.records.len() >= limits.max_photos {
                break;
            }
            let pid = photo_id(&record.member_id, &item.url);
            if let Some(path) = existing_file(&member_dir, &pid) {
                outcome.records.push(PhotoRecord {
                    photo_id: pid,
                    member_id: record.member_id.clone(),
                    file_path: path.display().to_string(),
                    source_url: Some(item.url.clone()),
                    fetched_at: None,
                });
                continue;
            }
            let (content_type, bytes) = match get_with_retry(&agent, &item.url, &mut pacer) {
                Ok(r) => r,
                Err(msg) => {
                    outcome.failures.push(format!("{}: {msg}", item.url));
                    continue;
                }
            };
            let Some(ext) = extension_for(&content_type) else {
                outcome.skipped_non_image += 1;
                continue;
            };
            let path = member_dir.join(format!("{pid}.{ext}"));
            std::fs::write(&path, &bytes).map_err(|e| CorpusError::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            let fetched_at = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .ok();
            outcome.records.push(PhotoRecord {
                photo_id: pid,
                member_id: record.member_id.clone(),
                file_path: path.display().to_string(),
                source_url: Some(item.url.clone()),
                fetched_at,
            });
        }
        match listing.next_page {
            Some(next) => page = next,
            None => break,
        }
    }
    outcome.records.sort_by(|a, b| a.photo_id.cmp(&b.photo_id));
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Chamber, Party};
    use std::collections::HashMap;
    use std::io::{Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::{Arc, Mutex};

    type Responder = dyn Fn(&str) -> (u16, String, Vec<u8>) + Send + Sync;

    struct TestServer {
        base: String,
        hits: Arc<Mutex<HashMap<String, usize>>>,
    }

    impl TestServer {
        fn start(respond: Arc<Responder>) -> TestServer {
            let listener = TcpListener::bind("127.0.0.1:0").unwrap();
            let base = format!("http://{}", listener.local_addr().unwrap());
            let hits: Arc<Mutex<HashMap<String, usize>>> = Arc::default();
            let hits_thread = Arc::clone(&hits);
            std::thread::spawn(move || {
                for stream in listener.incoming() {
                    let Ok(mut stream) = stream else { continue };
                    let mut buf = [0u8; 4096];
                    let mut req = Vec::new();
                    loop {
                        match stream.read(&mut buf) {
                            Ok(0) => break,
                            Ok(n) => {
                                req.extend_from_slice(&buf[..n]);
                                if req.windows(4).any(|w| w == b"\r\n\r\n") {
                                    break;
                                }
                            }
                            Err(_) => break,
                        }
                    }
                    let text = String::from_utf8_lossy(&req);
                    let path = text
                        .lines()
                        .next()
                        .and_then(|l| l.split_whitespace().nth(1))
                        .unwrap_or("/")
                        .to_string();
                    *hits_thread.lock().unwrap().entry(path.clone()).or_insert(0) += 1;
                    let (status, content_type, body) = respond(&path);
                    let reason = if status == 200 { "OK" } else { "Error" };
                    let header = format!(
                        "HTTP/1.1 {status} {reason}\r\nContent-Type: {content_type}\r\n\
                         Content-Length: {}\r\nConnection: close\r\n\r\n",
                        body.len()
                    );
                    let _ = stream.write_all(header.as_bytes());
                    let _ = stream.write_all(&body);
                }
            });
            TestServer { base, hits }
        }

        fn hits(&self, path: &str) -> usize {
            self.hits.lock().unwrap().get(path).copied().unwrap_or(0)
        }
    }

    fn png_bytes(shade: u8) -> Vec<u8> {
        use image::ImageEncoder;
        let mut out = Vec::new();
        image::codecs::png::PngEncoder::new(&mut out)
            .write_image(&[shade; 4], 2, 2, image::ExtendedColorType::L8)
            .unwrap();
        out
    }

    fn json(value: serde_json::Value) -> (u16, String, Vec<u8>) {
        (200, "application/json".into(), value.to_string().into_bytes())
    }

    fn member(username: Option<&str>) -> LegislatorRecord {
        LegislatorRecord {
            member_id: "D000001".into(),
            name: "Ada Doe".into(),
            chamber: Chamber::House,
            party: Party::Democrat,
            state: "PA".into(),
            district: Some(1),
            facebook_username: username.map(String::from),
            is_white: true,
        }
    }

    fn fast_limits() -> FetchLimits {
        FetchLimits {
            max_photos: 100,
            rate_per_sec: 10_000.0,
        }
    }

    /// Two listing pages with 3 + 2 photos; /img/N serves a tiny PNG.
    fn paged_responder(base: String) -> Arc<Responder> {
        Arc::new(move |path: &str| {
            if path == "/photos/adadoe/1" {
                json(serde_json::json!({
                    "photos": (0..3).map(|i| serde_json::json!({"url": format!("{base}/img/{i}")})).collect::<Vec<_>>(),
                    "next_page": 2
                }))
            } else if path == "/photos/adadoe/2" {
                json(serde_json::json!({
                    "photos": (3..5).map(|i| serde_json::json!({"url": format!("{base}/img/{i}")})).collect::<Vec<_>>()
                }))
            } else if let Some(n) = path.strip_prefix("/img/") {
                let shade: u8 = n.parse::<u8>().unwrap() * 40;
                (200, "image/png".into(), png_bytes(shade))
            } else {
                (404, "text/plain".into(), b"not found".to_vec())
            }
        })
    }

    fn start_paged_server() -> TestServer {
        // the responder needs its own base URL for image links, so bind first
        let placeholder: Arc<Mutex<String>> = Arc::default();
        let inner = Arc::clone(&placeholder);
        let server = TestServer::start(Arc::new(move |path: &str| {
            let base = inner.lock().unwrap().clone();
            paged_responder(base)(path)
        }));
        *placeholder.lock().unwrap() = server.base.clone();
        server
    }

    #[test]
    fn five_images_over_two_pages_land_on_disk() {
        let server = start_paged_server();
        let dir = tempfile::tempdir().unwrap();
        let template = format!("{}/photos/{{username}}/{{page}}", server.base);
        let outcome =
            fetch_photos(&member(Some("adadoe")), &template, dir.path(), &fast_limits()).unwrap();
        assert_eq!(outcome.records.len(), 5);
        assert!(outcome.failures.is_empty());
        assert_eq!(outcome.skipped_non_image, 0);
        for r in &outcome.records {
            assert!(Path::new(&r.file_path).is_file(), "{}", r.file_path);
            assert_eq!(r.member_id, "D000001");
            assert!(r.file_path.ends_with(".png"));
            assert!(r.fetched_at.is_some());
        }
        let on_disk = std::fs::read_dir(dir.path().join("D000001")).unwrap().count();
        assert_eq!(on_disk, 5);
    }

    #[test]
    fn rerun_downloads_nothing_new_but_reports_all_records() {
        let server = start_paged_server();
        let dir = tempfile::tempdir().unwrap();
        let template = format!("{}/photos/{{username}}/{{page}}", server.base);
        let m = member(Some("adadoe"));
        let first = fetch_photos(&m, &template, dir.path(), &fast_limits()).unwrap();
        let image_hits_after_first: usize = (0..5).map(|i| server.hits(&format!("/img/{i}"))).sum();
        assert_eq!(image_hits_after_first, 5);

        let second = fetch_photos(&m, &template, dir.path(), &fast_limits()).unwrap();
        assert_eq!(second.records.len(), 5);
        let ids_first: Vec<_> = first.records.iter().map(|r| &r.photo_id).collect();
        let ids_second: Vec<_> = second.records.iter().map(|r| &r.photo_id).collect();
        assert_eq!(ids_first, ids_second);
        // resumed run re-reads listings but never re-downloads an image
        let image_hits_after_second: usize = (0..5).map(|i| server.hits(&format!("/img/{i}"))).sum();
        assert_eq!(image_hits_after_second, 5);
        assert!(second.records.iter().all(|r| r.fetched_at.is_none()));
    }

    #[test]
    fn empty_listing_returns_no_records() {
        let server = TestServer::start(Arc::new(|path: &str| {
            if path.starts_with("/photos/") {
                json(serde_json::json!({ "photos": [] }))
            } else {
                (404, "text/plain".into(), Vec::new())
            }
        }));
        let dir = tempfile::tempdir().unwrap();
        let template = format!("{}/photos/{{username}}/{{page}}", server.base);
        let outcome =
            fetch_photos(&member(Some("adadoe")), &template, dir.path(), &fast_limits()).unwrap();
        assert!(outcome.records.is_empty());
        assert!(outcome.failures.is_empty());
    }

    #[test]
    fn members_without_a_username_fetch_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let outcome = fetch_photos(
            &member(None),
            "http://127.0.0.1:1/photos/{username}/{page}",
            dir.path(),
            &fast_limits(),
        )
        .unwrap();
        assert!(outcome.records.is_empty());
    }

    #[test]
    fn transient_failures_are_retried_with_backoff() {
        let placeholder: Arc<Mutex<String>> = Arc::default();
        let inner = Arc::clone(&placeholder);
        let counter = Arc::new(AtomicUsize::new(0));
        let counter_in = Arc::clone(&counter);
        let server = TestServer::start(Arc::new(move |path: &str| {
            let base = inner.lock().unwrap().clone();
            if path == "/photos/adadoe/1" {
                json(serde_json::json!({
                    "photos": [{"url": format!("{base}/flaky.png")}]
                }))
            } else if path == "/flaky.png" {
                let n = counter_in.fetch_add(1, Ordering::SeqCst);
                if n < 2 {
                    (500, "text/plain".into(), b"try again".to_vec())
                } else {
                    (200, "image/png".into(), png_bytes(100))
                }
            } else {
                (404, "text/plain".into(), Vec::new())
            }
        }));
        *placeholder.lock().unwrap() = server.base.clone();
        let dir = tempfile::tempdir().unwrap();
        let template = format!("{}/photos/{{username}}/{{page}}", server.base);
        let outcome =
            fetch_photos(&member(Some("adadoe")), &template, dir.path(), &fast_limits()).unwrap();
        assert_eq!(outcome.records.len(), 1);
        assert!(outcome.failures.is_empty(), "{:?}", outcome.failures);
        assert_eq!(counter.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn hard_failures_are_recorded_not_fatal() {
        let placeholder: Arc<Mutex<String>> = Arc::default();
        let inner = Arc::clone(&placeholder);
        let server = TestServer::start(Arc::new(move |path: &str| {
            let base = inner.lock().unwrap().clone();
            if path == "/photos/adadoe/1" {
                json(serde_json::json!({
                    "photos": [
                        {"url": format!("{base}/img/0")},
                        {"url": format!("{base}/broken.png")},
                    ]
                }))
            } else if path == "/img/0" {
                (200, "image/png".into(), png_bytes(10))
            } else if path == "/broken.png" {
                (500, "text/plain".into(), b"no".to_vec())
            } else {
                (404, "text/plain".into(), Vec::new())
            }
        }));
        *placeholder.lock().unwrap() = server.base.clone();
        let dir = tempfile::tempdir().unwrap();
        let template = format!("{}/photos/{{username}}/{{page}}", server.base);
        let outcome =
            fetch_photos(&member(Some("adadoe")), &template, dir.path(), &fast_limits()).unwrap();
        assert_eq!(outcome.records.len(), 1);
        assert_eq!(outcome.failures.len(), 1);
        assert!(outcome.failures[0].contains("broken.png"), "{:?}", outcome.failures);
        // each failed URL is attempted exactly RETRIES times
        assert_eq!(server.hits("/broken.png"), 3);
    }

    #[test]
    fn non_image_content_is_skipped_with_a_count() {
        let placeholder: Arc<Mutex<String>> = Arc::default();
        let inner = Arc::clone(&placeholder);
        let server = TestServer::start(Arc::new(move |path: &str| {
            let base = inner.lock().unwrap().clone();
            if path == "/photos/adadoe/1" {
                json(serde_json::json!({
                    "photos": [
                        {"url": format!("{base}/img/0")},
                        {"url": format!("{base}/page.html")},
                    ]
                }))
            } else if path == "/img/0" {
                (200, "image/png".into(), png_bytes(10))
            } else if path == "/page.html" {
                (200, "text/html".into(), b"<html></html>".to_vec())
            } else {
                (404, "text/plain".into(), Vec::new())
            }
        }));
        *placeholder.lock().unwrap() = server.base.clone();
        let dir = tempfile::tempdir().unwrap();
        let template = format!("{}/photos/{{username}}/{{page}}", server.base);
        let outcome =
            fetch_photos(&member(Some("adadoe")), &template, dir.path(), &fast_limits()).unwrap();
        assert_eq!(outcome.records.len(), 1);
        assert_eq!(outcome.skipped_non_image, 1);
        let on_disk = std::fs::read_dir(dir.path().join("D000001")).unwrap().count();
        assert_eq!(on_disk, 1);
    }

    #[test]
    fn max_photos_caps_the_download() {
        let server = start_paged_server();
        let dir = tempfile::tempdir().unwrap();
        let template = format!("{}/photos/{{username}}/{{page}}", server.base);
        let limits = FetchLimits {
            max_photos: 2,
            rate_per_sec: 10_000.0,
        };
        let outcome =
            fetch_photos(&member(Some("adadoe")), &template, dir.path(), &limits).unwrap();
        assert_eq!(outcome.records.len(), 2);
        assert_eq!(server.hits("/photos/adadoe/2"), 0);
    }

    #[test]
    fn bad_template_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            fetch_photos(
                &member(Some("a")),
                "http://x/photos",
                dir.path(),
                &fast_limits()
            ),
            Err(CorpusError::Validation(_))
        ));
    }
}
