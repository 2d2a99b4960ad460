//! Lossy URL canonicalization used as the story and fixture lookup key.
//!
//! The canonical form has no scheme: `host[:port]/path?sorted=query`. Hosts
//! are lowercased with any leading `www.` removed, fragments and tracking
//! parameters are dropped, and a trailing slash on the path is removed.

use std::fmt;
use url::Url;

/// Query keys removed outright (compared case-insensitively).
const TRACKING_KEYS: [&str; 7] = ["fbclid", "gclid", "dclid", "msclkid", "ref", "ref_src", "igshid"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UrlError {
    /// The part that could not be understood: `scheme`, `host`, `port` or `syntax`.
    pub component: &'static str,
    pub input: String,
}

impl fmt::Display for UrlError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "malformed URL {:?}: bad {}", self.input, self.component)
    }
}

impl std::error::Error for UrlError {}

fn is_tracking_key(key: &str) -> bool {
    let key = key.to_ascii_lowercase();
    key.starts_with("utm_") || TRACKING_KEYS.contains(&key.as_str()) || is_session_key(&key)
}

/// `sid`, `sessionid`, `session_id`, `phpsessid`, `jsessionid`, `aspsessionidXYZ` and similar.
fn is_session_key(key: &str) -> bool {
    key == "sid" || key.contains("sessionid") || key.contains("session_id") || key.ends_with("sessid")
}

fn has_scheme(s: &str) -> Option<&str> {
    let colon = s.find(':')?;
    let scheme = &s[..colon];
    let valid = scheme.chars().next()?.is_ascii_alphabetic()
        && scheme.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
    if !valid {
        return None;
    }
    let rest = &s[colon + 1..];
    // `example.com:8080/x` is a host and port, not a scheme.
    if rest.starts_with("//") || !rest.starts_with(|c: char| c.is_ascii_digit()) {
        Some(scheme)
    } else {
        None
    }
}

/// Parses `input` (scheme optional) into a [`Url`] with an http(s) scheme.
pub fn parse_lenient(input: &str) -> Result<Url, UrlError> {
    let trimmed = input.trim();
    let err = |component| UrlError { component, input: input.to_string() };
    if trimmed.is_empty() {
        return Err(err("syntax"));
    }
    let candidate = match has_scheme(trimmed) {
        Some(s) if s.eq_ignore_ascii_case("http") || s.eq_ignore_ascii_case("https") => trimmed.to_string(),
        Some(_) => return Err(err("scheme")),
        None if trimmed.starts_with("//") => format!("http:{trimmed}"),
        None => format!("http://{trimmed}"),
    };
    let url = Url::parse(&candidate).map_err(|e| {
        err(match e {
            url::ParseError::EmptyHost
            | url::ParseError::IdnaError
            | url::ParseError::InvalidIpv4Address
            | url::ParseError::InvalidIpv6Address
            | url::ParseError::InvalidDomainCharacter => "host",
            url::ParseError::InvalidPort => "port",
            _ => "syntax",
        })
    })?;
    if url.host_str().map_or(true, str::is_empty) {
        return Err(err("host"));
    }
    Ok(url)
}

/// Canonical lookup key for a URL. Idempotent.
pub fn normalize_url(input: &str) -> Result<String, UrlError> {
    let url = parse_lenient(input)?;
    let mut host = url.host_str().unwrap_or_default().to_ascii_lowercase();
    while let Some(rest) = host.strip_prefix("www.") {
        if rest.is_empty() {
            break;
        }
        host = rest.to_string();
    }
    let mut out = host;
    if let Some(port) = url.port() {
        out.push_str(&format!(":{port}"));
    }

    let mut path = url.path().to_string();
    if let Some(i) = path.to_ascii_lowercase().find(";jsessionid=") {
        path.truncate(i);
    }
    while path.ends_with('/') {
        path.pop();
    }
    out.push_str(&path);

    if let Some(query) = url.query() {
        let mut pairs: Vec<(&str, &str)> = query
            .split('&')
            .filter(|p| !p.is_empty())
            .map(|p| p.split_once('=').unwrap_or((p, "")))
            .filter(|(k, _)| !is_tracking_key(&percent_decode(k)))
            .collect();
        pairs.sort();
        let rendered: Vec<String> = pairs
            .into_iter()
            .map(|(k, v)| if v.is_empty() { k.to_string() } else { format!("{k}={v}") })
            .collect();
        if !rendered.is_empty() {
            out.push('?');
            out.push_str(&rendered.join("&"));
        }
    }
    Ok(out)
}

/// Normalized form, or the trimmed input when it is not a usable URL.
pub fn normalize_or_raw(input: &str) -> String {
    normalize_url(input).unwrap_or_else(|_| input.trim().to_string())
}

fn percent_decode(s: &str) -> String {
    url::form_urlencoded::parse(s.as_bytes())
        .next()
        .map_or_else(|| s.to_string(), |(k, _)| k.into_owned())
}

/// Lowercased host without leading `www.`.
pub fn host_of(input: &str) -> Result<String, UrlError> {
    let url = parse_lenient(input)?;
    let host = url.host_str().unwrap_or_default().to_ascii_lowercase();
    Ok(host.strip_prefix("www.").map(str::to_string).unwrap_or(host))
}

/// Registrable domain (public suffix plus one label) of a URL's host.
/// Hosts without a known suffix, such as IP addresses, are returned whole.
pub fn registrable_domain(input: &str) -> Result<String, UrlError> {
    let host = host_of(input)?;
    if host.parse::<std::net::IpAddr>().is_ok() || host.starts_with('[') {
        return Ok(host);
    }
    Ok(psl::domain_str(&host).map_or_else(|| host.clone(), str::to_string))
}

/// Resolves `href` against `base`, dropping the fragment. Only http(s)
/// results are returned.
pub fn absolutize(base: &Url, href: &str) -> Option<Url> {
    let href = href.trim();
    if href.is_empty() || href.starts_with('#') {
        return None;
    }
    let mut url = base.join(href).ok()?;
    if !matches!(url.scheme(), "http" | "https") {
        return None;
    }
    url.set_fragment(None);
    Some(url)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_examples() {
        assert_eq!(normalize_url("https://WWW.Example.com/a/?utm_source=x").unwrap(), "example.com/a");
        assert_eq!(normalize_url("example.com/a").unwrap(), "example.com/a");
        assert_eq!(normalize_url("http://example.com/a?b=2&a=1#frag").unwrap(), "example.com/a?a=1&b=2");
    }

    #[test]
    fn tracking_and_session_params() {
        let n = normalize_url("http://x.org/p?fbclid=1&gclid=2&ref=home&PHPSESSID=9&sid=3&id=7&utm_medium=m").unwrap();
        assert_eq!(n, "x.org/p?id=7");
        assert_eq!(normalize_url("http://x.org/p;jsessionid=ABC?q=1").unwrap(), "x.org/p?q=1");
    }

    #[test]
    fn scheme_host_and_port() {
        assert_eq!(normalize_url("http://x.org/").unwrap(), "x.org");
        assert_eq!(normalize_url("HTTPS://x.org:443/a").unwrap(), "x.org/a");
        assert_eq!(normalize_url("x.org:8080/a").unwrap(), "x.org:8080/a");
        assert_eq!(normalize_url("//www.x.org/a").unwrap(), "x.org/a");
        assert_eq!(normalize_url("http://WWW.www.X.org").unwrap(), "x.org");
    }

    #[test]
    fn malformed_inputs_name_the_component() {
        assert_eq!(normalize_url("mailto:a@b.c").unwrap_err().component, "scheme");
        assert_eq!(normalize_url("http://").unwrap_err().component, "host");
        assert_eq!(normalize_url("http://x.org:99999/").unwrap_err().component, "port");
        assert_eq!(normalize_url("   ").unwrap_err().component, "syntax");
    }

    #[test]
    fn domains() {
        assert_eq!(registrable_domain("https://sub.example.co.uk/x").unwrap(), "example.co.uk");
        assert_eq!(registrable_domain("http://www.newsite.org").unwrap(), "newsite.org");
        assert_eq!(registrable_domain("http://127.0.0.1:8000/").unwrap(), "127.0.0.1");
        assert_eq!(host_of("http://WWW.A.com/").unwrap(), "a.com");
    }

    #[test]
    fn absolutize_links() {
        let base = Url::parse("http://a.com/dir/page.html").unwrap();
        assert_eq!(absolutize(&base, "x.html#top").unwrap().as_str(), "http://a.com/dir/x.html");
        assert_eq!(absolutize(&base, "/y").unwrap().as_str(), "http://a.com/y");
        assert!(absolutize(&base, "javascript:void(0)").is_none());
        assert!(absolutize(&base, "#frag").is_none());
    }
}
