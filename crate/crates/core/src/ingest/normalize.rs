//! Item-id normalization.
//!
//! Items are URLs in practice, but the log format treats them as opaque
//! strings. Anything that parses as an absolute URL with a host is
//! canonicalized; everything else is kept verbatim after trimming.

use url::Url;

/// Query parameters that only carry campaign or click tracking.
const TRACKING_PARAMS: &[&str] = &[
    "fbclid", "gclid", "dclid", "msclkid", "mc_cid", "mc_eid", "igshid", "ref_src", "ref_url",
    "_ga", "yclid",
];

fn is_tracking_param(key: &str) -> bool {
    let key = key.to_ascii_lowercase();
    key.starts_with("utm_") || TRACKING_PARAMS.contains(&key.as_str())
}

/// Canonical form of an item id, or `None` when nothing is left after trimming.
///
/// Scheme and host are lowercased (the `url` crate does this while parsing),
/// the fragment is dropped and tracking parameters are removed. The remaining
/// query pairs keep their original order and encoding.
pub fn normalize_item(raw: &str) -> Option<String> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return None;
    }
    let mut url = match Url::parse(trimmed) {
        Ok(url) if url.has_host() => url,
        _ => return Some(trimmed.to_string()),
    };
    url.set_fragment(None);
    if let Some(query) = url.query() {
        let kept: Vec<&str> = query
            .split('&')
            .filter(|pair| !pair.is_empty())
            .filter(|pair| {
                let key = pair.split('=').next().unwrap_or_default();
                !is_tracking_param(key)
            })
            .collect();
        if kept.is_empty() {
            url.set_query(None);
        } else {
            let joined = kept.join("&");
            url.set_query(Some(&joined));
        }
    }
    Some(url.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lowercases_scheme_and_host() {
        assert_eq!(
            normalize_item("HTTPS://News.Example.COM/Path/To").as_deref(),
            Some("https://news.example.com/Path/To")
        );
    }

    #[test]
    fn strips_fragment_and_tracking() {
        assert_eq!(
            normalize_item("http://a.com/x?id=3&utm_source=tw&fbclid=zz#top").as_deref(),
            Some("http://a.com/x?id=3")
        );
        assert_eq!(
            normalize_item("http://a.com/x?utm_medium=social").as_deref(),
            Some("http://a.com/x")
        );
    }

    #[test]
    fn opaque_ids_pass_through() {
        assert_eq!(normalize_item("  u1 ").as_deref(), Some("u1"));
        assert_eq!(normalize_item("   "), None);
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(raw in "[ -~]{0,40}") {
            if let Some(once) = normalize_item(&raw) {
                prop_assert_eq!(normalize_item(&once), Some(once.clone()));
            }
        }

        #[test]
        fn url_normalization_is_idempotent(
            host in "[a-zA-Z]{1,8}",
            path in "[a-z0-9/]{0,10}",
            query in "(utm_[a-z]{1,4}=[a-z]{1,3}&|k[a-z]{0,3}=[a-z0-9]{0,3}&){0,4}",
        ) {
            let raw = format!("http://{host}.com/{path}?{query}#frag");
            let once = normalize_item(&raw).unwrap();
            prop_assert!(!once.contains("utm_"));
            prop_assert!(!once.contains('#'));
            prop_assert_eq!(normalize_item(&once), Some(once.clone()));
        }
    }
}
