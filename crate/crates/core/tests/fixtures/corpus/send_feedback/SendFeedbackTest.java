package com.example.notes.test;

import io.appium.java_client.MobileElement;
import io.appium.java_client.android.AndroidDriver;
import org.junit.Test;

public class SendFeedbackTest {
    private AndroidDriver<MobileElement> driver;

    @Test
    public void testSendFeedback() {
        driver.findElementByXPath("/hierarchy/android.widget.FrameLayout/android.widget.LinearLayout/android.widget.EditText").sendKeys("Great app");
        driver.findElementById("com.example.notes:id/btn_submit").click();
    }
}
